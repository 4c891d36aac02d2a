"""
Amplifier figures of merit: compression point, bandwidth, flux-tuning coverage, design comparison
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.constants as cst
import scipy.optimize

from bjpa.circuit import BlochniumDesign, EffectiveModel, tuned_model
from bjpa.errors import (
    BJPAError,
    ConfigurationError,
    CoverageGapError,
    ErrorDetail,
    NearSingularError,
    OperatingPointError,
    UndefinedBandwidthError,
    UnreachableGainError,
)
from bjpa.gain import gain_at
from bjpa.steady_state import (
    CRITICAL_DELTA,
    BranchPolicy,
    OperatingPoint,
    PumpDrive,
    drive_for_coupling,
    operating_point,
)

logger = logging.getLogger(__name__)

COMPRESSION_DB = 1.0
COMPRESSION_TOL_DB = 0.01
POWER_TOL_DB = 1e-9
BANDWIDTH_DROP_DB = 3.0


@dataclass(frozen=True)
class PhysicalScale:
    """Pump frequency and coupling rate, both in rad/s"""
    omega_p: float
    kappa: float

    def __post_init__(self):
        if not (self.omega_p > 0 and self.kappa > 0):
            raise ConfigurationError("omega_p and kappa must be positive",
                                     context={"omega_p": self.omega_p, "kappa": self.kappa})


def dbm_to_watts(power_dbm: float) -> float:
    """Convert power from dBm to watts."""
    return 1e-3 * 10 ** (power_dbm / 10)


def watts_to_dbm(power_watts: float) -> float:
    """Convert power from watts to dBm."""
    if power_watts <= 0:
        return -math.inf
    return 10 * math.log10(power_watts / 1e-3)


def photon_flux(power_watts: float, scale: PhysicalScale) -> float:
    """Input photons per second at the pump frequency"""
    return power_watts / (cst.hbar * scale.omega_p)


def drive_from_watts(power_watts: float, scale: PhysicalScale, model: EffectiveModel,
                     delta: float, pump_phase: float = 0.0) -> PumpDrive:
    a_in_sq = photon_flux(power_watts, scale) / scale.kappa
    return PumpDrive(delta=delta, zeta=(model.kerr_k / scale.kappa) * a_in_sq, pump_phase=pump_phase)


def drive_from_power(p_in_dbm: float, scale: PhysicalScale, model: EffectiveModel,
                     delta: float = 0.0, pump_phase: float = 0.0) -> PumpDrive:
    """dBm -> photon flux -> |a_in|^2 per linewidth -> zeta = (K/kappa) |a_in|^2"""
    return drive_from_watts(dbm_to_watts(p_in_dbm), scale, model, delta, pump_phase)


def pump_power_for_zeta(zeta: float, scale: PhysicalScale, model: EffectiveModel) -> float:
    """Inverse of drive_from_power; zeta must carry the sign of K"""
    if model.kerr_k == 0 or zeta * model.kerr_k <= 0:
        raise UnreachableGainError(
            f"zeta={zeta} is not reachable with K={model.kerr_k}",
            context={"zeta": zeta, "kerr_k": model.kerr_k},
        )
    a_in_sq = zeta * scale.kappa / model.kerr_k
    return watts_to_dbm(a_in_sq * scale.kappa * cst.hbar * scale.omega_p)


def _signal_gain_db(op: OperatingPoint) -> float:
    try:
        return gain_at(op, 0.0).g_signal_db
    except NearSingularError:
        return math.inf


@dataclass
class P1dBResult:
    small_signal_gain_db: float
    p1db_dbm: Optional[float]
    pump_power_dbm: float
    ceiling_dbm: float
    gain_at_p1db_db: Optional[float] = None
    converged: bool = True

    @property
    def open_ended(self) -> bool:
        """No compression below the ceiling (reported as P1dB > ceiling)"""
        return self.p1db_dbm is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "small_signal_gain_db": self.small_signal_gain_db,
            "p1db_dbm": self.p1db_dbm,
            "pump_power_dbm": self.pump_power_dbm,
            "ceiling_dbm": self.ceiling_dbm,
            "open_ended": self.open_ended,
            "gain_at_p1db_db": self.gain_at_p1db_db,
            "converged": self.converged,
        }


def compression_point(model: EffectiveModel, scale: PhysicalScale, pump_power_dbm: float,
                      delta: float, ceiling_dbm: float = -60.0, span_db: float = 80.0,
                      step_db: float = 0.5,
                      policy: BranchPolicy = BranchPolicy.LOW_STABLE) -> P1dBResult:
    """
    Signal power at which the gain drops 1 dB below its small-signal value.

    Combined-drive model: the signal power adds to the pump power in the steady-state
    drive term, which shifts n and therefore the gain.
    """
    pump_watts = dbm_to_watts(pump_power_dbm)
    op0 = operating_point(drive_from_watts(pump_watts, scale, model, delta), policy)
    small_signal = _signal_gain_db(op0)
    if not op0.stable or not math.isfinite(small_signal):
        raise OperatingPointError(
            "pump operating point is unstable or has no finite gain",
            context={"pump_power_dbm": pump_power_dbm, "delta": delta},
        )

    if model.kerr_k == 0:
        return P1dBResult(small_signal, None, pump_power_dbm, ceiling_dbm)

    target = small_signal - COMPRESSION_DB

    def gain_with_signal(signal_dbm: float) -> float:
        total = pump_watts + dbm_to_watts(signal_dbm)
        return _signal_gain_db(operating_point(drive_from_watts(total, scale, model, delta), policy))

    previous = pump_power_dbm - span_db
    if previous >= ceiling_dbm:
        return P1dBResult(small_signal, None, pump_power_dbm, ceiling_dbm)

    crossing = None
    for signal_dbm in np.arange(previous + step_db, ceiling_dbm + step_db / 2, step_db):
        signal_dbm = float(signal_dbm)
        if gain_with_signal(signal_dbm) <= target:
            crossing = signal_dbm
            break
        previous = signal_dbm
    if crossing is None:
        logger.info("No compression below ceiling", extra={
            "event_type": "p1db_open_ended", "pump_power_dbm": pump_power_dbm, "ceiling_dbm": ceiling_dbm,
        })
        return P1dBResult(small_signal, None, pump_power_dbm, ceiling_dbm)

    low, high = previous, crossing
    gain_high = gain_with_signal(high)
    for _ in range(200):
        if high - low < POWER_TOL_DB:
            break
        mid = 0.5 * (low + high)
        gain_mid = gain_with_signal(mid)
        if gain_mid <= target:
            high, gain_high = mid, gain_mid
        else:
            low = mid

    converged = abs(gain_high - target) <= COMPRESSION_TOL_DB
    if not converged:
        logger.warning("Compression crossing is discontinuous", extra={
            "event_type": "p1db_jump", "p1db_dbm": high, "gain_db": gain_high, "target_db": target,
        })
    return P1dBResult(small_signal, high, pump_power_dbm, ceiling_dbm,
                      gain_at_p1db_db=gain_high, converged=converged)


def gain_peak_coupling(delta_same_sign: float) -> Tuple[float, bool]:
    """
    End of the rising side of the low-branch pump gain, as |zeta n|.

    delta_same_sign is delta times the sign of K. Along the low branch the
    resonant gain is 1 + u^2 / c(u)^2 with u = |zeta n| and
    c(u) = 3u^2 - 4du + d^2 + 1/4. Past the bistability onset the branch ends
    at a fold where c = 0 and the gain is unbounded (returns True); otherwise
    u / c(u) peaks at u^2 = (d^2 + 1/4) / 3.
    """
    d = delta_same_sign
    if d >= CRITICAL_DELTA:
        return (4 * d - math.sqrt(max(4 * d * d - 3.0, 0.0))) / 6.0, True
    return math.sqrt((d * d + 0.25) / 3.0), False


def pump_power_for_gain(model: EffectiveModel, scale: PhysicalScale, delta: float,
                        gain_target_db: float) -> float:
    """Smallest pump power (dBm) whose low-branch operating point reaches the gain target"""
    if model.kerr_k == 0:
        raise UnreachableGainError("a linear resonator (K = 0) has no parametric gain",
                                   context={"gain_target_db": gain_target_db})
    if not gain_target_db > 0:
        raise ConfigurationError("gain target must be positive", context={"gain_target_db": gain_target_db})
    sign = math.copysign(1.0, model.kerr_k)
    d = sign * delta
    ratio = math.sqrt(10 ** (gain_target_db / 10) - 1.0)

    def slope(u: float) -> float:
        return 3 * u * u - 4 * d * u + d * d + 0.25

    def shortfall(u: float) -> float:
        # positive while the gain is below target
        return ratio * slope(u) - u

    u_peak, unbounded = gain_peak_coupling(d)
    if not unbounded and shortfall(u_peak) > 0:
        peak_db = 10 * math.log10(1 + (u_peak / slope(u_peak)) ** 2)
        raise UnreachableGainError(
            f"no stable pump setting reaches {gain_target_db} dB at delta={delta} (peak {peak_db:.2f} dB)",
            context={"gain_target_db": gain_target_db, "delta": delta, "peak_gain_db": peak_db},
        )
    u = scipy.optimize.brentq(shortfall, 0.0, u_peak, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    magnitude = drive_for_coupling(u, d)
    logger.debug("Pump solved for gain", extra={
        "event_type": "pump_for_gain", "delta": delta, "gain_target_db": gain_target_db,
        "zeta": sign * magnitude, "coupling": u,
    })
    return pump_power_for_zeta(sign * magnitude, scale, model)


@dataclass
class BandwidthResult:
    peak_gain_db: float
    lower: float
    upper: float
    width_ghz: Optional[float] = None

    @property
    def width(self) -> float:
        """Full -3 dB width in units of kappa"""
        return self.upper - self.lower

    def to_dict(self) -> Dict[str, Any]:
        return {"peak_gain_db": self.peak_gain_db, "lower": self.lower, "upper": self.upper,
                "bandwidth": self.width, "bandwidth_ghz": self.width_ghz}


def _crossing(func, direction: float) -> float:
    reach = 1.0
    while func(direction * reach) >= 0:
        reach *= 2
        if reach > 1e6:
            raise UndefinedBandwidthError("gain never drops 3 dB below its peak")
    return scipy.optimize.brentq(lambda d: func(direction * d), 0.0, reach, xtol=1e-12)


def bandwidth_3db(op: OperatingPoint, scale: Optional[PhysicalScale] = None) -> BandwidthResult:
    """Full width in signal detuning over which gain stays within 3 dB of its Delta = 0 value"""
    peak = gain_at(op, 0.0).g_signal_db
    if not peak > BANDWIDTH_DROP_DB:
        raise UndefinedBandwidthError(
            f"peak gain {peak:.3f} dB is below {BANDWIDTH_DROP_DB} dB",
            context={"peak_gain_db": peak},
        )
    target = peak - BANDWIDTH_DROP_DB

    def excess(big_delta: float) -> float:
        try:
            return gain_at(op, big_delta).g_signal_db - target
        except NearSingularError:
            return math.inf

    upper = _crossing(excess, 1.0)
    lower = -_crossing(excess, -1.0)
    result = BandwidthResult(peak_gain_db=peak, lower=lower, upper=upper)
    if scale is not None:
        result.width_ghz = result.width * scale.kappa / (2 * math.pi) / 1e9
    return result


@dataclass
class TuningPoint:
    flux_bias: float
    omega_eff_ghz: float
    gain_db: float
    bandwidth_ghz: float
    pump_power_dbm: float
    zeta: float
    band_low_ghz: float
    band_high_ghz: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flux_bias": self.flux_bias,
            "omega_eff_ghz": self.omega_eff_ghz,
            "gain_db": self.gain_db,
            "bandwidth_ghz": self.bandwidth_ghz,
            "pump_power_dbm": self.pump_power_dbm,
            "zeta": self.zeta,
            "band_low_ghz": self.band_low_ghz,
            "band_high_ghz": self.band_high_ghz,
        }


@dataclass
class TuningCurve:
    points: List[TuningPoint]
    overlaps: List[bool] = field(default_factory=list)
    covered: bool = False

    @property
    def any_overlap(self) -> bool:
        return any(self.overlaps)


def band_coverage(design: BlochniumDesign, scale: PhysicalScale, band_ghz: Tuple[float, float],
                  n_points: int, delta: float, gain_target_db: float = 20.0,
                  max_flux_bias: float = 1.5) -> TuningCurve:
    """
    Flux-tune the design across a band and record gain and bandwidth at each setting.

    The pump follows the resonance at fixed normalized detuning. Adjacent -3 dB intervals
    that intersect are flagged as overlapping spectra.
    """
    low, high = band_ghz
    if not low < high:
        raise ConfigurationError(f"band low edge {low} must be below high edge {high}")
    if n_points < 1:
        raise ConfigurationError("n_points must be >= 1")

    f0 = tuned_model(design.replace(flux_bias=0.0)).omega_eff / (2 * math.pi) / 1e9
    reachable = (f0 * math.sqrt(math.cos(max_flux_bias)), f0)
    if reachable[1] < high * (1 - 1e-9) or reachable[0] > low * (1 + 1e-9):
        raise CoverageGapError(
            f"design tunes over {reachable[0]:.4f}-{reachable[1]:.4f} GHz, band is {low}-{high} GHz",
            context={"reachable_ghz": list(reachable), "band_ghz": [low, high]},
        )

    if n_points == 1:
        biases = [0.0]
    else:
        targets = np.linspace(high, low, n_points)
        biases = [float(np.arccos(min(1.0, (f / f0) ** 2))) for f in targets]

    points = []
    for phi in biases:
        model = tuned_model(design.replace(flux_bias=phi))
        omega_p = model.omega_eff + delta * scale.kappa
        local_scale = PhysicalScale(omega_p=omega_p, kappa=scale.kappa)
        pump = pump_power_for_gain(model, local_scale, delta, gain_target_db)
        op = operating_point(drive_from_power(pump, local_scale, model, delta))
        bandwidth = bandwidth_3db(op, local_scale)
        pump_ghz = omega_p / (2 * math.pi) / 1e9
        kappa_ghz = scale.kappa / (2 * math.pi) / 1e9
        points.append(TuningPoint(
            flux_bias=phi,
            omega_eff_ghz=model.omega_eff / (2 * math.pi) / 1e9,
            gain_db=bandwidth.peak_gain_db,
            bandwidth_ghz=bandwidth.width_ghz,
            pump_power_dbm=pump,
            zeta=op.drive.zeta,
            band_low_ghz=pump_ghz + bandwidth.lower * kappa_ghz,
            band_high_ghz=pump_ghz + bandwidth.upper * kappa_ghz,
        ))

    overlaps = []
    for upper_point, lower_point in zip(points, points[1:]):
        overlaps.append(lower_point.band_high_ghz >= upper_point.band_low_ghz)

    centers = [p.omega_eff_ghz for p in points]
    rel = 1e-9
    covered = min(centers) <= low * (1 + rel) and max(centers) >= high * (1 - rel)
    logger.info("Band coverage computed", extra={
        "event_type": "band_coverage", "points": len(points), "covered": covered,
        "overlaps": sum(overlaps), "f0_ghz": f0,
    })
    return TuningCurve(points=points, overlaps=overlaps, covered=covered)


@dataclass
class DesignMetric:
    """P1dB of one design at matched gain, or the error that prevented it"""
    pump_power_dbm: Optional[float] = None
    p1db: Optional[P1dBResult] = None
    error: Optional[ErrorDetail] = None

    @property
    def p1db_dbm(self) -> Optional[float]:
        return self.p1db.p1db_dbm if self.p1db else None


@dataclass
class ComparisonRecord:
    a: DesignMetric
    b: DesignMetric
    gain_target_db: float

    @property
    def difference_db(self) -> Optional[float]:
        if self.a.p1db_dbm is None or self.b.p1db_dbm is None:
            return None
        return self.a.p1db_dbm - self.b.p1db_dbm

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gain_target_db": self.gain_target_db,
            "pump_power_a_dbm": self.a.pump_power_dbm,
            "pump_power_b_dbm": self.b.pump_power_dbm,
            "p1db_a_dbm": self.a.p1db_dbm,
            "p1db_b_dbm": self.b.p1db_dbm,
            "difference_db": self.difference_db,
            "error_a": self.a.error.message if self.a.error else None,
            "error_b": self.b.error.message if self.b.error else None,
        }


def matched_gain_p1db(design: BlochniumDesign, scale: PhysicalScale, gain_target_db: float,
                      delta: float, ceiling_dbm: float = -60.0) -> DesignMetric:
    try:
        model = tuned_model(design)
        pump = pump_power_for_gain(model, scale, delta, gain_target_db)
        return DesignMetric(pump_power_dbm=pump,
                            p1db=compression_point(model, scale, pump, delta, ceiling_dbm))
    except BJPAError as exc:
        return DesignMetric(error=ErrorDetail.from_exception(exc, {"design": design.to_dict()}))


def compare_designs(a: BlochniumDesign, b: BlochniumDesign, scale: PhysicalScale,
                    gain_target_db: float = 20.0, delta: float = -0.8,
                    ceiling_dbm: float = -60.0) -> ComparisonRecord:
    """P1dB of two designs, each pumped to the same gain"""
    return ComparisonRecord(
        a=matched_gain_p1db(a, scale, gain_target_db, delta, ceiling_dbm),
        b=matched_gain_p1db(b, scale, gain_target_db, delta, ceiling_dbm),
        gain_target_db=gain_target_db,
    )
