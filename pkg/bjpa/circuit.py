"""
Circuit model of a Blochnium chain: N Quartons, each M slave SQUIDs shunted by a master SQUID.

Builds the capacitance and inverse-inductance matrices of the node-flux Lagrangian,
solves the linear mode, and reduces the chain to a single Kerr oscillator.
"""
import dataclasses
import functools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np
import scipy.constants as cst
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from bjpa.errors import ConfigurationError, SingularInductanceError
from bjpa.settings import settings

logger = logging.getLogger(__name__)

FLUX_QUANTUM = cst.h / (2 * cst.e)
REDUCED_FLUX_QUANTUM = FLUX_QUANTUM / (2 * math.pi)

Matrix = Union[np.ndarray, scipy.sparse.csr_matrix]


@dataclass(frozen=True)
class BlochniumDesign:
    """Full circuit parameterization; SI units, rates in rad/s"""
    n_quartons: int
    m_slaves: int
    alpha_c: float
    e_js: float
    c_g: float
    c_js: float
    c_jm: float
    z0: float
    kappa: float
    flux_bias: float = 0.0
    e_c_override: Optional[float] = None

    @property
    def node_count(self) -> int:
        return self.n_quartons * self.m_slaves + 1

    @property
    def junction_count(self) -> int:
        """Slave plus master junctions (a master link is absent when alpha_c = 0)"""
        masters = self.n_quartons if self.alpha_c > 0 else 0
        return self.n_quartons * self.m_slaves + masters

    def validate(self) -> List[str]:
        """Return a list of invariant violations (empty when valid)"""
        errors = []
        if not isinstance(self.n_quartons, int) or self.n_quartons < 1:
            errors.append("n_quartons must be a positive integer")
        if not isinstance(self.m_slaves, int) or self.m_slaves < 1:
            errors.append("m_slaves must be a positive integer")
        if not self.alpha_c >= 0:
            errors.append("alpha_c must be >= 0")
        for name in ("e_js", "c_g", "c_js", "c_jm", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                errors.append(f"{name} must be > 0")
        if not self.z0 > 0:
            errors.append("z0 must be > 0")
        if self.e_c_override is not None and not self.e_c_override > 0:
            errors.append("e_c_override must be > 0")
        if not errors and self.node_count > settings.max_chain_nodes:
            errors.append(
                f"chain has {self.node_count} nodes; at most {settings.max_chain_nodes} are supported"
            )
        return errors

    def ensure_valid(self) -> None:
        errors = self.validate()
        if errors:
            raise ConfigurationError("; ".join(errors), context={"design": self.to_dict()})
        if not abs(self.flux_bias) < math.pi / 2:
            raise SingularInductanceError(
                f"flux_bias {self.flux_bias} rad makes the junction inductance singular",
                context={"flux_bias": self.flux_bias},
            )

    def replace(self, **changes: Any) -> "BlochniumDesign":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class CircuitMatrices:
    """Quadratic part of the chain Lagrangian over node fluxes phi_0 ... phi_{M*N}"""
    node_count: int
    cap_matrix: Matrix
    inv_ind_matrix: Matrix
    slave_link_count: int = 0
    master_link_count: int = 0

    @property
    def is_sparse(self) -> bool:
        return scipy.sparse.issparse(self.cap_matrix)

    def grounded(self):
        """Node 0 tied to ground: drop its row and column"""
        if self.node_count < 2:
            raise ConfigurationError("grounding needs at least two nodes")
        return self.inv_ind_matrix[1:, 1:], self.cap_matrix[1:, 1:]


@dataclass(frozen=True)
class EffectiveModel:
    """Single-mode Kerr oscillator; rates in rad/s, energy in joules"""
    omega_eff: float
    kappa: float
    kerr_k: float
    e_c: float

    @property
    def kerr_over_kappa(self) -> float:
        return self.kerr_k / self.kappa

    def to_dict(self) -> Dict[str, Any]:
        """Report form: ordinary frequencies"""
        return {
            "omega_eff_ghz": self.omega_eff / (2 * math.pi) / 1e9,
            "kerr_hz": self.kerr_k / (2 * math.pi),
            "e_c_ghz": self.e_c / cst.h / 1e9,
            "kappa_mhz": self.kappa / (2 * math.pi) / 1e6,
            "kerr_over_kappa": self.kerr_over_kappa,
        }


def junction_inductance(l_j0: float, flux_bias: float) -> float:
    """L_J = L_J0 / cos(phi)"""
    if not abs(flux_bias) < math.pi / 2:
        raise SingularInductanceError(
            f"junction inductance diverges at flux_bias={flux_bias}",
            context={"flux_bias": flux_bias},
        )
    return l_j0 / math.cos(flux_bias)


def slave_inductance(design: BlochniumDesign) -> float:
    """Flux-scaled slave junction inductance (Phi0/2pi)^2 / (E_Js cos phi)"""
    return junction_inductance(REDUCED_FLUX_QUANTUM ** 2 / design.e_js, design.flux_bias)


def quarton_inductance(design: BlochniumDesign) -> float:
    """Series slaves in parallel with the master link"""
    series = design.m_slaves * slave_inductance(design)
    if design.alpha_c == 0:
        return series
    master = slave_inductance(design) / design.alpha_c
    return series * master / (series + master)


def _link_triplets(links: np.ndarray, value: float):
    i, j = links[:, 0], links[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    data = np.concatenate([
        np.full(len(i), value), np.full(len(i), value),
        np.full(len(i), -value), np.full(len(i), -value),
    ])
    return rows, cols, data


def _assemble(size: int, diagonal: float, parts, dense: bool) -> Matrix:
    rows = [np.arange(size)]
    cols = [np.arange(size)]
    data = [np.full(size, diagonal)]
    for r, c, d in parts:
        rows.append(r)
        cols.append(c)
        data.append(d)
    matrix = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
    return matrix.toarray() if dense else matrix


def build_matrices(design: BlochniumDesign) -> CircuitMatrices:
    """
    Assemble the capacitance and inverse-inductance matrices.

    Slave links join consecutive nodes (k, k+1) for k < M*N; master links join
    (M*k, M*(k+1)) for k < N. With alpha_c = 0 the master inductance is an open
    circuit and only the master capacitance remains.
    """
    design.ensure_valid()
    m, n = design.m_slaves, design.n_quartons
    size = design.node_count

    slave_index = np.arange(m * n)
    slave_links = np.column_stack([slave_index, slave_index + 1])
    master_index = np.arange(n)
    master_links = np.column_stack([m * master_index, m * (master_index + 1)])

    l_js = slave_inductance(design)
    dense = size <= settings.dense_eigensolve_limit

    cap_parts = [_link_triplets(slave_links, design.c_js), _link_triplets(master_links, design.c_jm)]
    ind_parts = [_link_triplets(slave_links, 1.0 / l_js)]
    if design.alpha_c > 0:
        # L_Jm = L_Js / alpha_c
        ind_parts.append(_link_triplets(master_links, design.alpha_c / l_js))

    matrices = CircuitMatrices(
        node_count=size,
        cap_matrix=_assemble(size, design.c_g, cap_parts, dense),
        inv_ind_matrix=_assemble(size, 0.0, ind_parts, dense),
        slave_link_count=len(slave_links),
        master_link_count=len(master_links),
    )
    logger.debug("Circuit matrices assembled", extra={
        "event_type": "build_matrices", "nodes": size, "dense": dense,
    })
    return matrices


def _check_positive_definite(cap: Matrix) -> None:
    if scipy.sparse.issparse(cap):
        diagonal = cap.diagonal()
        off_diagonal = np.asarray(abs(cap).sum(axis=1)).ravel() - np.abs(diagonal)
        if np.any(diagonal - off_diagonal <= 0):
            raise ConfigurationError("capacitance matrix is not positive definite after grounding")
        return
    try:
        np.linalg.cholesky(cap)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError("capacitance matrix is not positive definite after grounding") from exc


def mode_spectrum(matrices: CircuitMatrices, count: int = 1) -> np.ndarray:
    """Lowest `count` eigenfrequencies (rad/s) of the grounded chain, ascending"""
    inv_ind, cap = matrices.grounded()
    size = cap.shape[0]
    count = max(1, min(count, size))
    _check_positive_definite(cap)

    if scipy.sparse.issparse(cap):
        k = min(count, size - 1) if size > 1 else 1
        omega_sq = scipy.sparse.linalg.eigsh(
            inv_ind.tocsc(), k=k, M=cap.tocsc(), sigma=0, which="LM", return_eigenvectors=False
        )
    else:
        omega_sq = scipy.linalg.eigh(
            inv_ind, cap, eigvals_only=True, subset_by_index=[0, count - 1]
        )
    omega_sq = np.sort(np.real(omega_sq))
    return np.sqrt(np.clip(omega_sq, 0.0, None))


def effective_mode(matrices: CircuitMatrices) -> float:
    """Smallest strictly positive generalized eigenfrequency of the grounded chain"""
    spectrum = mode_spectrum(matrices, count=min(3, matrices.node_count - 1))
    scale = float(np.max(spectrum)) if len(spectrum) else 0.0
    positive = spectrum[spectrum > 1e-12 * scale]
    if len(positive) == 0:
        raise ConfigurationError("chain has no positive-frequency mode")
    return float(positive[0])


def charging_energy(c_sigma: float) -> float:
    """E_c = e^2 / (2 C)"""
    if not c_sigma > 0:
        raise ConfigurationError(f"capacitance must be positive, got {c_sigma}")
    return cst.e ** 2 / (2 * c_sigma)


def design_charging_energy(design: BlochniumDesign) -> float:
    """Per-junction charging energy unless the design overrides it"""
    if design.e_c_override is not None:
        return design.e_c_override
    return charging_energy(design.c_js)


def kerr_coefficient(design: BlochniumDesign, e_c: float) -> float:
    """K = -E_c (1/M - alpha_c/M) / (6 hbar N), in rad/s"""
    kerr = -e_c * (1.0 - design.alpha_c) / (6 * cst.hbar * design.n_quartons * design.m_slaves)
    return kerr + 0.0  # no negative zero at alpha_c = 1


def estimate_kappa(design: BlochniumDesign, omega_eff: float) -> float:
    """
    Rough coupling-rate diagnostic kappa ~ omega^2 C_g^2 Z0 / C_total.

    Not used by any computation; kappa is always taken from the design.
    """
    c_total = design.node_count * design.c_g
    return omega_eff ** 2 * design.c_g ** 2 * design.z0 / c_total


@functools.lru_cache(maxsize=512)
def tuned_model(design: BlochniumDesign) -> EffectiveModel:
    """Flux-biased design reduced to its effective Kerr oscillator"""
    matrices = build_matrices(design)
    omega_eff = effective_mode(matrices)
    e_c = design_charging_energy(design)
    model = EffectiveModel(
        omega_eff=omega_eff,
        kappa=design.kappa,
        kerr_k=kerr_coefficient(design, e_c),
        e_c=e_c,
    )
    logger.debug("Effective model computed", extra={
        "event_type": "tuned_model", **model.to_dict(),
        "n_quartons": design.n_quartons, "m_slaves": design.m_slaves,
    })
    return model
