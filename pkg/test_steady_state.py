"""
Tests for the pump steady state: cubic roots, stability, bistability threshold, branch selection
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from bjpa import steady_state
from bjpa.steady_state import (
    CRITICAL_DELTA,
    CRITICAL_ZETA,
    Branch,
    BranchPolicy,
    PumpDrive,
    Root,
    RootSet,
    bifurcation_threshold,
    bistable_window,
    critical_detuning,
    cubic_residual,
    discriminant,
    has_three_roots,
    numerical_bifurcation_threshold,
    operating_point,
    photon_number_roots,
    pump_reflection,
    select_branch,
)


class TestPhotonNumberRoots:

    def test_linear_resonator_is_lorentzian(self):
        """zeta = 0 gives n = 1 / (1/4 + delta^2)"""
        for delta in (-2.0, -0.5, 0.0, 0.3, 1.7):
            roots = photon_number_roots(PumpDrive(delta=delta, zeta=0.0))
            assert roots.values == [pytest.approx(1.0 / (0.25 + delta ** 2))]
            assert roots.roots[0].stable
            assert not roots.bistable

    def test_on_resonance_unit_drive(self):
        assert photon_number_roots(PumpDrive(delta=0.0, zeta=0.0)).values == [pytest.approx(4.0)]

    def test_tiny_zeta_close_to_lorentzian(self):
        drive = PumpDrive(delta=0.2, zeta=-1e-9)
        roots = photon_number_roots(drive)
        assert len(roots.roots) == 1
        assert roots.values[0] == pytest.approx(1.0 / 0.29, rel=1e-6)
        assert abs(cubic_residual(drive, roots.values[0])) < 1e-12

    def test_bistable_three_roots(self):
        """Inside the window: three ascending roots, the middle one unstable"""
        window = bistable_window(-0.3)
        drive = PumpDrive(delta=0.5 * (window[0] + window[1]), zeta=-0.3)
        roots = photon_number_roots(drive)
        assert roots.bistable
        assert len(roots.roots) == 3
        assert roots.values == sorted(roots.values)
        assert [r.stable for r in roots.roots] == [True, False, True]
        for n in roots.values:
            assert n > 0
            assert abs(cubic_residual(drive, n)) < 1e-9

    def test_root_count_follows_discriminant(self):
        for delta, zeta in [(-1.17, -0.3), (-0.5, -0.3), (0.5, -0.3), (-2.0, -0.8), (1.5, 0.5), (0.0, 0.1)]:
            roots = photon_number_roots(PumpDrive(delta=delta, zeta=zeta))
            expected = 3 if discriminant(delta, zeta) > 0 else 1
            assert len(roots.roots) == expected

    @hypothesis_settings(max_examples=200, deadline=None)
    @given(
        delta=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
        zeta=st.floats(min_value=-0.19, max_value=0.19, allow_nan=False),
    )
    def test_below_threshold_single_stable_root(self, delta, zeta):
        """|zeta| below 1/sqrt(27): exactly one root, stable, at every detuning"""
        drive = PumpDrive(delta=delta, zeta=zeta)
        roots = photon_number_roots(drive)
        assert len(roots.roots) == 1
        assert not roots.bistable
        n = roots.values[0]
        assert n > 0
        assert roots.roots[0].stable
        assert abs(cubic_residual(drive, n)) <= 1e-9

    @hypothesis_settings(max_examples=200, deadline=None)
    @given(
        delta=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
        zeta=st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
    )
    def test_every_root_solves_the_cubic(self, delta, zeta):
        drive = PumpDrive(delta=delta, zeta=zeta)
        roots = photon_number_roots(drive)
        assert 1 <= len(roots.roots) <= 3
        for n in roots.values:
            assert n >= 0
            assert abs(cubic_residual(drive, n)) <= 1e-9


class TestBifurcation:

    def test_threshold_value(self):
        assert CRITICAL_ZETA == pytest.approx(1 / math.sqrt(27), abs=1e-15)
        assert bifurcation_threshold(verify=False) == CRITICAL_ZETA

    def test_bisection_agrees_with_analytic_threshold(self):
        assert numerical_bifurcation_threshold() == pytest.approx(CRITICAL_ZETA, abs=1e-6)

    def test_oracle_resolves_threshold_from_both_sides(self):
        assert has_three_roots(-(CRITICAL_ZETA + 1e-5))
        assert not has_three_roots(-(CRITICAL_ZETA - 1e-5))
        assert has_three_roots(CRITICAL_ZETA + 1e-5)

    def test_oracle_counts_solver_roots(self, monkeypatch):
        single = RootSet(roots=[Root(1.0, True)], bistable=False)
        triple = RootSet(roots=[Root(1.0, True), Root(2.0, False), Root(3.0, True)], bistable=True)
        monkeypatch.setattr(steady_state, "photon_number_roots", lambda drive: single)
        assert not has_three_roots(-0.4)
        assert numerical_bifurcation_threshold(tol=1e-6) == pytest.approx(1.0, abs=1e-5)
        monkeypatch.setattr(steady_state, "photon_number_roots", lambda drive: triple)
        assert has_three_roots(-0.01)
        assert numerical_bifurcation_threshold(tol=1e-6) == pytest.approx(0.0, abs=1e-5)

    def test_oracle_is_limited_to_its_detuning_grid(self):
        assert has_three_roots(-0.4)
        assert not has_three_roots(-0.4, deltas=np.linspace(0.0, 3.0, 301))

    def test_threshold_collapses_to_a_double_root(self):
        """At |zeta| = 1/sqrt(27) the three-root region shrinks to delta = -sqrt(3)/2"""
        drive = PumpDrive(delta=-CRITICAL_DELTA, zeta=-CRITICAL_ZETA)
        roots = photon_number_roots(drive)
        assert len(roots.roots) == 1
        assert not roots.bistable
        assert roots.double_root
        assert roots.values[0] == pytest.approx(3.0, abs=1e-4)
        assert abs(cubic_residual(drive, roots.values[0])) <= 1e-9
        for delta in np.linspace(-CRITICAL_DELTA - 0.05, -CRITICAL_DELTA + 0.05, 101):
            assert len(photon_number_roots(PumpDrive(delta=float(delta), zeta=-CRITICAL_ZETA)).roots) == 1

    def test_no_window_below_threshold(self):
        for zeta in (-0.05, -0.15, -0.19, 0.19):
            assert bistable_window(zeta) is None
            assert not has_three_roots(zeta)

    def test_window_sign_follows_zeta(self):
        """Bistability appears beyond |delta| = sqrt(3)/2, on the side given by the sign of zeta"""
        negative = bistable_window(-0.3)
        positive = bistable_window(0.3)
        assert negative is not None and positive is not None
        assert negative[0] < negative[1] <= -CRITICAL_DELTA
        assert positive == (pytest.approx(-negative[1]), pytest.approx(-negative[0]))
        assert critical_detuning(-0.3) == -CRITICAL_DELTA
        assert critical_detuning(0.3) == CRITICAL_DELTA

    def test_window_edges_bound_three_roots(self):
        low, high = bistable_window(-0.4)
        inside = np.linspace(low, high, 12)[1:-1]
        for delta in inside:
            assert len(photon_number_roots(PumpDrive(delta=float(delta), zeta=-0.4)).roots) == 3
        for delta in (low - 0.05, high + 0.05):
            assert len(photon_number_roots(PumpDrive(delta=delta, zeta=-0.4)).roots) == 1


class TestOperatingPoint:

    def test_select_branch_keeps_the_drive(self):
        drive = PumpDrive(delta=-0.8, zeta=-0.1, pump_phase=0.3)
        op = select_branch(photon_number_roots(drive), drive, BranchPolicy.HIGH_STABLE)
        assert op.drive is drive
        assert op.coupling == pytest.approx(-0.1 * op.n)
        with pytest.raises(TypeError):
            select_branch(photon_number_roots(drive))

    def test_branch_policies_in_bistable_region(self):
        window = bistable_window(-0.3)
        drive = PumpDrive(delta=0.5 * (window[0] + window[1]), zeta=-0.3)
        low = operating_point(drive, BranchPolicy.LOW_STABLE)
        high = operating_point(drive, BranchPolicy.HIGH_STABLE)
        assert low.branch is Branch.LOW
        assert high.branch is Branch.HIGH
        assert low.n < high.n
        assert low.stable and high.stable
        assert low.bistable

    def test_monostable_point_reports_low_branch(self):
        op = operating_point(PumpDrive(delta=-0.8, zeta=-0.1), BranchPolicy.HIGH_STABLE)
        assert op.branch is Branch.LOW
        assert op.coupling == pytest.approx(-0.1 * op.n)
        assert op.to_dict()["branch"] == "low"

    def test_low_branch_is_continuous_in_zeta(self):
        """Steps of 1e-4 in zeta never move n by more than 1e-3"""
        previous = None
        for zeta in np.arange(0.0, -0.19, -1e-4):
            n = operating_point(PumpDrive(delta=0.8, zeta=float(zeta))).n
            if previous is not None:
                assert abs(n - previous) < 1e-3
            previous = n

    def test_high_branch_jump_past_window(self):
        """Leaving the window on the far side collapses onto a single root"""
        _, high = bistable_window(-0.3)
        op = operating_point(PumpDrive(delta=high + 0.1, zeta=-0.3), BranchPolicy.HIGH_STABLE)
        assert not op.bistable
        assert op.stable


class TestPumpReflection:

    def test_linear_resonator(self):
        assert pump_reflection(PumpDrive(delta=0.0, zeta=0.0), 4.0) == pytest.approx(1.0 + 0j)
        far = pump_reflection(PumpDrive(delta=1e6, zeta=0.0), 1.0 / (0.25 + 1e12))
        assert far == pytest.approx(-1.0 + 0j, abs=1e-5)

    def test_kerr_shift_moves_the_resonance(self):
        """Reflection depends on delta - zeta n only"""
        drive = PumpDrive(delta=-0.8, zeta=-0.15)
        n = operating_point(drive).n
        shifted = PumpDrive(delta=-0.8 + 0.15 * n, zeta=0.0)
        assert pump_reflection(drive, n) == pytest.approx(pump_reflection(shifted, 1.0))

    @hypothesis_settings(max_examples=200, deadline=None)
    @given(
        delta=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
        zeta=st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
    )
    def test_lossless_and_consistent_with_photon_number(self, delta, zeta):
        """|r| = 1 on every branch, and |1 + r|^2 is the intracavity photon number"""
        drive = PumpDrive(delta=delta, zeta=zeta)
        for n in photon_number_roots(drive).values:
            reflection = pump_reflection(drive, n)
            assert abs(reflection) == pytest.approx(1.0, abs=1e-12)
            assert abs(1.0 + reflection) ** 2 == pytest.approx(n, rel=1e-8)
