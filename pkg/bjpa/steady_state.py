"""
Pump steady state of the driven Kerr mode.

Normalized photon number n solves
    zeta^2 n^3 - 2 delta zeta n^2 + (1/4 + delta^2) n - 1 = 0
with delta the pump detuning and zeta the drive-weighted Kerr strength (both in units of kappa).
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

logger = logging.getLogger(__name__)

CRITICAL_ZETA = 1.0 / math.sqrt(27.0)
CRITICAL_DELTA = math.sqrt(3.0) / 2.0

RESIDUAL_TOL = 1e-9
MERGE_TOL = 1e-10
SLOPE_TOL = 1e-8
CLUSTER_RESIDUAL_TOL = 1e-12
IMAG_TOL = 1e-6
NEWTON_STEPS = 4
SMALL_ZETA = 1e-6


class BranchPolicy(Enum):
    """Which stable root an operating point uses"""
    LOW_STABLE = "low_stable"
    HIGH_STABLE = "high_stable"


class Branch(Enum):
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class PumpDrive:
    """Normalized pump: detuning delta, nonlinearity zeta, pump phase (radians)"""
    delta: float
    zeta: float
    pump_phase: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"delta": self.delta, "zeta": self.zeta, "pump_phase": self.pump_phase}


@dataclass(frozen=True)
class Root:
    n: float
    stable: bool


@dataclass
class RootSet:
    """Physical roots, ascending in n"""
    roots: List[Root]
    bistable: bool
    double_root: bool = False

    @property
    def values(self) -> List[float]:
        return [root.n for root in self.roots]

    @property
    def stable_roots(self) -> List[Root]:
        return [root for root in self.roots if root.stable]


@dataclass
class OperatingPoint:
    drive: PumpDrive
    n: float
    branch: Branch
    stable: bool
    bistable: bool = False

    @property
    def coupling(self) -> float:
        """zeta * n, the parametric coupling in units of kappa"""
        return self.drive.zeta * self.n

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.drive.to_dict(),
            "n": self.n,
            "branch": self.branch.value,
            "stable": self.stable,
            "bistable": self.bistable,
        }


def cubic_residual(drive: PumpDrive, n: float) -> float:
    d, z = drive.delta, drive.zeta
    return (0.25 + d * d) * n - 2 * d * z * n * n + z * z * n ** 3 - 1.0


def cubic_slope(drive: PumpDrive, n: float) -> float:
    d, z = drive.delta, drive.zeta
    return 0.25 + d * d - 4 * d * z * n + 3 * z * z * n * n


def _polish(drive: PumpDrive, n: float) -> float:
    for _ in range(NEWTON_STEPS):
        slope = cubic_slope(drive, n)
        if slope == 0.0:
            break
        step = cubic_residual(drive, n) / slope
        n -= step
        if abs(step) <= 1e-16 * max(1.0, abs(n)):
            break
    return n


def _scaled_roots(delta: float, zeta: float) -> np.ndarray:
    """Companion-matrix eigenvalues of y^3 - 2 delta y^2 + (delta^2 + 1/4) y - zeta, y = zeta n"""
    companion = scipy.linalg.companion([1.0, -2.0 * delta, delta * delta + 0.25, -zeta])
    return np.linalg.eigvals(companion)


def root_stability(drive: PumpDrive, n: float) -> bool:
    """Slope criterion: a branch is stable where the cubic crosses zero upward"""
    return cubic_slope(drive, n) > 0


def _same_root(drive: PumpDrive, lower: float, upper: float) -> bool:
    """Candidates of one multiple root: too close to separate, or no sign change of the cubic between them"""
    if upper - lower <= MERGE_TOL * max(1.0, abs(upper)):
        return True
    return abs(cubic_residual(drive, 0.5 * (lower + upper))) <= CLUSTER_RESIDUAL_TOL


def photon_number_roots(drive: PumpDrive) -> RootSet:
    """All real non-negative roots of the steady-state cubic"""
    if drive.zeta == 0:
        n = 1.0 / (0.25 + drive.delta ** 2)
        return RootSet(roots=[Root(n=n, stable=True)], bistable=False)
    if abs(drive.zeta) < SMALL_ZETA:
        # y = zeta n is below eigenvalue resolution; perturb the Lorentzian root instead
        n = _polish(drive, 1.0 / (0.25 + drive.delta ** 2))
        return RootSet(roots=[Root(n=n, stable=root_stability(drive, n))], bistable=False)

    candidates = []
    eigenvalues = _scaled_roots(drive.delta, drive.zeta)
    for y in eigenvalues:
        if abs(y.imag) > IMAG_TOL * max(1.0, abs(y)):
            continue
        n = y.real / drive.zeta
        if n < 0:
            continue
        n = _polish(drive, n)
        if n >= 0 and abs(cubic_residual(drive, n)) <= RESIDUAL_TOL:
            candidates.append(n)

    if not candidates:
        # the cubic always has a positive root; take the most nearly real eigenvalue
        y = min(eigenvalues, key=lambda value: abs(value.imag))
        candidates.append(_polish(drive, y.real / drive.zeta))
        logger.warning("Fell back to nearest-real eigenvalue", extra={
            "event_type": "root_fallback", **drive.to_dict(),
        })

    candidates.sort()
    merged: List[float] = []
    double_root = False
    for n in candidates:
        if merged and _same_root(drive, merged[-1], n):
            double_root = True
            continue
        merged.append(n)
    if any(abs(cubic_slope(drive, n)) <= SLOPE_TOL for n in merged):
        double_root = True

    if len(merged) == 3:
        roots = [Root(merged[0], True), Root(merged[1], False), Root(merged[2], True)]
        return RootSet(roots=roots, bistable=True, double_root=double_root)

    roots = [Root(n=n, stable=root_stability(drive, n)) for n in merged]
    return RootSet(roots=roots, bistable=False, double_root=double_root)


def select_branch(roots: RootSet, drive: PumpDrive,
                  policy: BranchPolicy = BranchPolicy.LOW_STABLE) -> OperatingPoint:
    """Pick the operating root; falls back to the extreme root when none is stable"""
    if not roots.roots:
        raise ValueError("empty root set")
    pool = roots.stable_roots or roots.roots
    if policy is BranchPolicy.HIGH_STABLE:
        chosen, branch = pool[-1], Branch.HIGH
    else:
        chosen, branch = pool[0], Branch.LOW
    if len(roots.roots) == 1:
        branch = Branch.LOW
    return OperatingPoint(
        drive=drive,
        n=chosen.n,
        branch=branch,
        stable=chosen.stable,
        bistable=roots.bistable,
    )


def operating_point(drive: PumpDrive, policy: BranchPolicy = BranchPolicy.LOW_STABLE) -> OperatingPoint:
    return select_branch(photon_number_roots(drive), drive, policy)


def pump_reflection(drive: PumpDrive, n: float) -> complex:
    """
    Pump reflection alpha_out / alpha_in at the steady-state photon number n.

    The intracavity response to the pump is 1 / (1/2 + i (zeta n - delta)) with the
    Kerr-shifted detuning; the reflected wave is that response minus the input.
    """
    return 1.0 / (0.5 + 1j * (drive.zeta * n - drive.delta)) - 1.0


def discriminant(delta: float, zeta: float) -> float:
    """Discriminant of the scaled cubic; positive exactly when three distinct real roots exist"""
    b, c, d = -2.0 * delta, delta * delta + 0.25, -zeta
    return 18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d


def drive_for_coupling(y: float, delta: float) -> float:
    """zeta that puts the steady state at coupling y = zeta n"""
    return y * ((delta - y) ** 2 + 0.25)


def _turning_drives(delta: float) -> Tuple[float, float]:
    """Drive values at the two fold points for delta >= sqrt(3)/2: (upper, lower)"""
    root = math.sqrt(max(4 * delta * delta - 3.0, 0.0))
    y_fold_low = (4 * delta - root) / 6.0
    y_fold_high = (4 * delta + root) / 6.0
    return drive_for_coupling(y_fold_low, delta), drive_for_coupling(y_fold_high, delta)


def bistable_window(zeta: float) -> Optional[Tuple[float, float]]:
    """
    Pump-detuning interval with three positive roots, or None.

    delta carries the sign of zeta.
    """
    magnitude = abs(zeta)
    if magnitude == 0:
        return None
    start = CRITICAL_DELTA
    stop = 6.0 * magnitude + 2.0

    def enters(delta: float) -> float:
        return _turning_drives(delta)[0] - magnitude

    def leaves(delta: float) -> float:
        return _turning_drives(delta)[1] - magnitude

    if enters(start) >= 0 or leaves(start) >= 0:
        return None
    try:
        low = scipy.optimize.brentq(enters, start, stop, xtol=1e-14)
        high = scipy.optimize.brentq(leaves, start, stop, xtol=1e-14)
    except ValueError:
        return None
    if not low < high:
        return None
    sign = 1.0 if zeta > 0 else -1.0
    return (low, high) if sign > 0 else (-high, -low)


def critical_detuning(zeta: float = -1.0) -> float:
    """Detuning at which bistability first appears, with the sign of zeta"""
    return math.copysign(CRITICAL_DELTA, zeta)


DETUNING_SCAN = np.linspace(-3.0, 3.0, 601)


def _complex_spread(delta: float, zeta: float) -> float:
    """Largest imaginary part among the scaled roots; zero when all three are real"""
    return float(np.max(np.abs(_scaled_roots(delta, zeta).imag)))


def has_three_roots(zeta: float, deltas: Optional[np.ndarray] = None) -> bool:
    """
    Root-count oracle: does some detuning give three positive roots for this zeta.

    The detuning grid is scanned for the point where the companion eigenvalues are
    closest to all-real, refined by a bounded scalar minimization, and the roots of
    the cubic there are counted.
    """
    if zeta == 0:
        return False
    grid = DETUNING_SCAN if deltas is None else np.asarray(deltas, dtype=float)
    spreads = np.array([_complex_spread(d, zeta) for d in grid])
    best = int(np.argmin(spreads))
    candidates = [float(grid[best])]
    if spreads[best] > 0 and len(grid) > 1:
        low = float(grid[max(best - 1, 0)])
        high = float(grid[min(best + 1, len(grid) - 1)])
        refined = scipy.optimize.minimize_scalar(
            lambda d: _complex_spread(d, zeta), bounds=(low, high), method="bounded",
            options={"xatol": 1e-13, "maxiter": 500},
        )
        candidates.insert(0, float(refined.x))
    return any(len(photon_number_roots(PumpDrive(delta=d, zeta=zeta)).roots) == 3 for d in candidates)


def numerical_bifurcation_threshold(tol: float = 1e-9) -> float:
    """Bisection over |zeta| for the smallest drive with a bistable detuning"""
    low, high = 0.0, 1.0
    while high - low > tol:
        mid = 0.5 * (low + high)
        if has_three_roots(-mid):
            high = mid
        else:
            low = mid
    return 0.5 * (low + high)


def bifurcation_threshold(verify: bool = True) -> float:
    """Critical |zeta| = 1/sqrt(27), optionally cross-checked by bisection"""
    if verify:
        numerical = numerical_bifurcation_threshold()
        difference = abs(numerical - CRITICAL_ZETA)
        if difference > 1e-6:
            logger.warning("Bisection disagrees with analytic threshold", extra={
                "event_type": "bifurcation_check", "numerical": numerical, "difference": difference,
            })
    return CRITICAL_ZETA
