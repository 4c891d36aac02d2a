"""
Shared fixtures: the reference parameter set used across the test modules
"""
import math

import pytest

from bjpa.circuit import BlochniumDesign
from bjpa.metrics import PhysicalScale

# L_Js = 0.1 nH at zero flux
REFERENCE_E_JS = 1.0832e-21
REFERENCE_KAPPA = 2 * math.pi * 10e6
REFERENCE_OMEGA_P = 2 * math.pi * 6e9


def make_design(**changes) -> BlochniumDesign:
    params = dict(
        n_quartons=70,
        m_slaves=16,
        alpha_c=0.1,
        e_js=REFERENCE_E_JS,
        c_g=2.5e-17,
        c_js=50e-15,
        c_jm=5e-15,
        z0=50.0,
        kappa=REFERENCE_KAPPA,
    )
    params.update(changes)
    return BlochniumDesign(**params)


@pytest.fixture
def reference_design() -> BlochniumDesign:
    return make_design()


@pytest.fixture
def reference_scale() -> PhysicalScale:
    return PhysicalScale(omega_p=REFERENCE_OMEGA_P, kappa=REFERENCE_KAPPA)


def reference_config(**design_changes) -> dict:
    """Minimal valid run configuration as a JSON-ready dict"""
    design = {
        "n_quartons": 70,
        "m_slaves": 16,
        "alpha_c": 0.1,
        "e_js": REFERENCE_E_JS,
        "c_g": 2.5e-17,
        "c_js": 5.0e-14,
        "c_jm": 5.0e-15,
        "z0": 50.0,
        "kappa_mhz": 10.0,
    }
    design.update(design_changes)
    return {"design": design}
