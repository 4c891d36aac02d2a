"""
Signal and idler gain of the linearized amplifier.

The fluctuation equations around the pump form a 2x2 system M [da, da+]^T = [da_in, da_in+]^T;
with W = M^-1 the input-output relation gives signal reflection W[0][0] - 1 and idler conversion W[0][1].
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from bjpa.errors import NearSingularError, OperatingPointError
from bjpa.settings import settings
from bjpa.steady_state import BranchPolicy, OperatingPoint, PumpDrive, operating_point
from bjpa.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

DETERMINANT_TOL = 1e-14


@dataclass(frozen=True)
class SignalProbe:
    """Signal detuning from the pump in units of kappa"""
    big_delta: float


@dataclass
class ScatterMatrix:
    entries: np.ndarray

    @property
    def determinant(self) -> complex:
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])


def _db(amplitude: complex) -> float:
    magnitude = abs(amplitude)
    return 20 * math.log10(magnitude) if magnitude > 0 else -math.inf


@dataclass
class GainResult:
    g_signal: complex
    g_idler: complex
    g_signal_db: float
    g_idler_db: float

    @classmethod
    def from_amplitudes(cls, g_signal: complex, g_idler: complex) -> "GainResult":
        return cls(g_signal=g_signal, g_idler=g_idler,
                   g_signal_db=_db(g_signal), g_idler_db=_db(g_idler))

    @property
    def saturated(self) -> bool:
        return self.g_signal_db > settings.gain_saturation_db

    @property
    def symplectic_defect(self) -> float:
        """|g_s|^2 - |g_i|^2 - 1, zero for lossless scattering"""
        return abs(self.g_signal) ** 2 - abs(self.g_idler) ** 2 - 1.0


def scattering_matrix(op: OperatingPoint, probe: SignalProbe) -> ScatterMatrix:
    if not op.stable:
        logger.warning("Scattering matrix on an unstable branch", extra={
            "event_type": "unstable_operating_point", **op.to_dict(),
        })
    delta, big_delta = op.drive.delta, probe.big_delta
    x = op.coupling
    phase = cmath.exp(2j * op.drive.pump_phase)
    entries = np.array([
        [1j * (-delta - big_delta + 2 * x) + 0.5, 1j * x * phase],
        [-1j * x / phase, 1j * (delta - big_delta - 2 * x) + 0.5],
    ], dtype=complex)
    return ScatterMatrix(entries=entries)


def signal_idler_gain(m: ScatterMatrix) -> GainResult:
    det = m.determinant
    if abs(det) <= DETERMINANT_TOL:
        raise NearSingularError(
            "scattering matrix is singular: operating point at the parametric oscillation threshold",
            context={"determinant": abs(det)},
        )
    e = m.entries
    # closed-form 2x2 inverse
    w00 = e[1, 1] / det
    w01 = -e[0, 1] / det
    return GainResult.from_amplitudes(complex(w00 - 1.0), complex(w01))


def gain_at(op: OperatingPoint, big_delta: float = 0.0) -> GainResult:
    return signal_idler_gain(scattering_matrix(op, SignalProbe(big_delta)))


def gain_curve(op: OperatingPoint, probes: Sequence[SignalProbe]) -> List[GainResult]:
    return [gain_at(op, probe.big_delta) for probe in probes]


@dataclass
class GainMapPoint:
    """One (delta, zeta, big_delta) cell of a gain map"""
    op: OperatingPoint
    big_delta: float
    gain: Optional[GainResult]

    @property
    def saturated(self) -> bool:
        return self.gain is None or self.gain.saturated

    def to_record(self) -> Dict[str, Any]:
        ceiling = settings.gain_saturation_db
        if self.gain is None:
            signal_db, idler_db = ceiling, ceiling
        else:
            signal_db = min(self.gain.g_signal_db, ceiling)
            idler_db = min(self.gain.g_idler_db, ceiling)
        return {
            "delta": self.op.drive.delta,
            "zeta": self.op.drive.zeta,
            "big_delta": self.big_delta,
            "n": self.op.n,
            "stable": self.op.stable,
            "g_signal_db": signal_db,
            "g_idler_db": idler_db if math.isfinite(idler_db) else None,
            "saturated": self.saturated,
        }


def _map_row(drive: PumpDrive, probes: Sequence[SignalProbe], policy: BranchPolicy) -> List[GainMapPoint]:
    op = operating_point(drive, policy)
    row = []
    for probe in probes:
        try:
            gain = gain_at(op, probe.big_delta)
        except NearSingularError:
            gain = None
        row.append(GainMapPoint(op=op, big_delta=probe.big_delta, gain=gain))
    return row


def gain_map(drives: Sequence[PumpDrive], probes: Sequence[SignalProbe],
             policy: BranchPolicy = BranchPolicy.LOW_STABLE,
             pool: Optional[WorkerPool] = None) -> List[GainMapPoint]:
    """
    Gain over a drive grid times a probe grid.

    Output is row-major: all probes of the first drive, then the next drive.
    Singular cells are kept as saturated markers.
    """
    pool = pool or WorkerPool(max_workers=1)
    outcomes = pool.map_ordered(lambda drive: _map_row(drive, probes, policy), drives,
                                context=lambda drive: drive.to_dict())
    points: List[GainMapPoint] = []
    for outcome in outcomes:
        if not outcome.ok:
            raise OperatingPointError(outcome.error.message, context=outcome.error.context)
        points.extend(outcome.value)
    return points
