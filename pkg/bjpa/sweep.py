"""
Cartesian parameter sweeps over design, drive and scale parameters
"""
import functools
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

from bjpa.circuit import BlochniumDesign, EffectiveModel, tuned_model
from bjpa.errors import ConfigurationError, ErrorDetail
from bjpa.gain import GainResult, gain_at
from bjpa.metrics import (
    BandwidthResult,
    PhysicalScale,
    bandwidth_3db,
    compression_point,
    drive_from_power,
    pump_power_for_gain,
    pump_power_for_zeta,
)
from bjpa.settings import settings
from bjpa.steady_state import BranchPolicy, OperatingPoint, PumpDrive, operating_point
from bjpa.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

INTEGER_PARAMETERS = ("n_quartons", "m_slaves")
DESIGN_PARAMETERS = INTEGER_PARAMETERS + (
    "alpha_c", "e_js", "c_g", "c_js", "c_jm", "z0", "kappa_mhz", "flux_bias",
)
DRIVE_PARAMETERS = ("delta", "zeta", "pump_phase")
SCALE_PARAMETERS = ("pump_frequency_ghz",)
POWER_PARAMETERS = ("pump_power_dbm",)
PARAMETERS = DESIGN_PARAMETERS + DRIVE_PARAMETERS + SCALE_PARAMETERS + POWER_PARAMETERS

OUTPUTS = (
    "omega_eff_ghz", "kerr_hz", "zeta", "n", "stable", "bistable", "gain_db", "idler_db",
    "saturated", "bandwidth", "bandwidth_ghz", "pump_power_dbm", "p1db_dbm",
)


@dataclass
class SweepSpec:
    """Ordered axes plus the fixed context every grid point shares"""
    axes: List[Tuple[str, List[float]]]
    outputs: List[str]
    base_design: BlochniumDesign
    pump_frequency_ghz: float = 6.0
    delta: float = -0.8
    pump_phase: float = 0.0
    pump_power_dbm: Optional[float] = None
    gain_target_db: float = 20.0
    ceiling_dbm: float = -60.0
    policy: BranchPolicy = BranchPolicy.LOW_STABLE

    @property
    def grid_size(self) -> int:
        return math.prod(len(values) for _, values in self.axes)

    def validate(self) -> List[str]:
        errors = []
        names = [name for name, _ in self.axes]
        for name, values in self.axes:
            if name not in PARAMETERS:
                errors.append(f"unknown sweep parameter '{name}'")
            if not values:
                errors.append(f"axis '{name}' has no values")
        if len(set(names)) != len(names):
            errors.append("sweep axes must be distinct")
        for name in self.outputs:
            if name not in OUTPUTS:
                errors.append(f"unknown sweep output '{name}'")
        if not self.outputs:
            errors.append("at least one output is required")
        if not errors and self.grid_size > settings.sweep_point_cap:
            errors.append(f"grid has {self.grid_size} points; the cap is {settings.sweep_point_cap}")
        return errors

    def points(self) -> Iterator[Dict[str, float]]:
        """Row-major: the last axis varies fastest"""
        names = [name for name, _ in self.axes]
        for combination in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combination))


@dataclass
class SweepRecord:
    index: int
    inputs: Dict[str, Any]
    outputs: Dict[str, Any] = field(default_factory=dict)
    errors: Dict[str, ErrorDetail] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_row(self) -> Dict[str, Any]:
        row = dict(self.inputs)
        for name, value in self.outputs.items():
            row[name] = self.errors[name].marker if name in self.errors else value
        return row

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "inputs": self.inputs,
            "outputs": {name: value for name, value in self.outputs.items() if name not in self.errors},
            "errors": {name: detail.to_dict() for name, detail in self.errors.items()},
        }


class PointEvaluation:
    """Lazily computed pipeline for one grid point; each stage runs at most once"""

    def __init__(self, spec: SweepSpec, params: Dict[str, float]):
        self.spec = spec
        self.params = params

    def _param(self, name: str, default: Any) -> Any:
        return self.params.get(name, default)

    @functools.cached_property
    def design(self) -> BlochniumDesign:
        changes: Dict[str, Any] = {}
        for name in DESIGN_PARAMETERS:
            if name not in self.params:
                continue
            value = self.params[name]
            if name in INTEGER_PARAMETERS:
                changes[name] = int(round(value))
            elif name == "kappa_mhz":
                changes["kappa"] = 2 * math.pi * value * 1e6
            else:
                changes[name] = float(value)
        return self.spec.base_design.replace(**changes)

    @functools.cached_property
    def model(self) -> EffectiveModel:
        return tuned_model(self.design)

    @functools.cached_property
    def scale(self) -> PhysicalScale:
        frequency = self._param("pump_frequency_ghz", self.spec.pump_frequency_ghz)
        return PhysicalScale(omega_p=2 * math.pi * frequency * 1e9, kappa=self.design.kappa)

    @property
    def delta(self) -> float:
        return float(self._param("delta", self.spec.delta))

    @functools.cached_property
    def pump_power_dbm(self) -> float:
        if "pump_power_dbm" in self.params:
            return float(self.params["pump_power_dbm"])
        if "zeta" in self.params:
            return pump_power_for_zeta(float(self.params["zeta"]), self.scale, self.model)
        if self.spec.pump_power_dbm is not None:
            return self.spec.pump_power_dbm
        return pump_power_for_gain(self.model, self.scale, self.delta, self.spec.gain_target_db)

    @functools.cached_property
    def drive(self) -> PumpDrive:
        phase = float(self._param("pump_phase", self.spec.pump_phase))
        if "zeta" in self.params:
            return PumpDrive(delta=self.delta, zeta=float(self.params["zeta"]), pump_phase=phase)
        return drive_from_power(self.pump_power_dbm, self.scale, self.model, self.delta, phase)

    @functools.cached_property
    def op(self) -> OperatingPoint:
        return operating_point(self.drive, self.spec.policy)

    @functools.cached_property
    def gain(self) -> GainResult:
        return gain_at(self.op, 0.0)

    @functools.cached_property
    def bandwidth(self) -> BandwidthResult:
        return bandwidth_3db(self.op, self.scale)

    def output(self, name: str) -> Any:
        if name == "omega_eff_ghz":
            return self.model.omega_eff / (2 * math.pi) / 1e9
        if name == "kerr_hz":
            return self.model.kerr_k / (2 * math.pi)
        if name == "zeta":
            return self.drive.zeta
        if name == "n":
            return self.op.n
        if name == "stable":
            return self.op.stable
        if name == "bistable":
            return self.op.bistable
        if name == "gain_db":
            return min(self.gain.g_signal_db, settings.gain_saturation_db)
        if name == "idler_db":
            idler = self.gain.g_idler_db
            return min(idler, settings.gain_saturation_db) if math.isfinite(idler) else None
        if name == "saturated":
            return self.gain.saturated
        if name == "bandwidth":
            return self.bandwidth.width
        if name == "bandwidth_ghz":
            return self.bandwidth.width_ghz
        if name == "pump_power_dbm":
            return self.pump_power_dbm
        if name == "p1db_dbm":
            return compression_point(self.model, self.scale, self.pump_power_dbm, self.delta,
                                     self.spec.ceiling_dbm, policy=self.spec.policy).p1db_dbm
        raise ConfigurationError(f"unknown sweep output '{name}'")


def evaluate_point(spec: SweepSpec, index: int, params: Dict[str, float]) -> SweepRecord:
    """Compute every requested output; a failing output becomes an error marker for that field only"""
    evaluation = PointEvaluation(spec, params)
    record = SweepRecord(index=index, inputs=dict(params))
    for name in spec.outputs:
        try:
            record.outputs[name] = evaluation.output(name)
        except Exception as exc:
            record.outputs[name] = None
            record.errors[name] = ErrorDetail.from_exception(exc, {"output": name, **params})
    return record


def run_sweep(spec: SweepSpec, pool: Optional[WorkerPool] = None) -> List[SweepRecord]:
    """Evaluate the full grid; records come back in row-major axis order"""
    errors = spec.validate()
    if errors:
        raise ConfigurationError("; ".join(errors))
    pool = pool or WorkerPool(max_workers=1)
    points = list(spec.points())
    outcomes = pool.map_ordered(lambda item: evaluate_point(spec, item[0], item[1]), list(enumerate(points)),
                                context=lambda item: dict(item[1]))

    records = []
    for index, (params, outcome) in enumerate(zip(points, outcomes)):
        if outcome.ok:
            records.append(outcome.value)
            continue
        record = SweepRecord(index=index, inputs=dict(params))
        for name in spec.outputs:
            record.outputs[name] = None
            record.errors[name] = outcome.error
        records.append(record)

    failed = sum(1 for record in records if not record.ok)
    logger.info("Sweep finished", extra={
        "event_type": "sweep_finished", "points": len(records), "points_with_errors": failed,
    })
    return records
