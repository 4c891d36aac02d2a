"""
Constrained design search: maximize P1dB subject to a minimum small-signal gain.

Seeding evaluates the whole parameter lattice when it fits the budget, otherwise a
Latin-hypercube sample. Refinement is coordinate descent: +-1 moves on integer axes,
golden-section search on continuous axes.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from bjpa.circuit import BlochniumDesign, tuned_model
from bjpa.errors import BJPAError, ConfigurationError
from bjpa.gain import gain_at
from bjpa.metrics import PhysicalScale, compression_point, drive_from_power, pump_power_for_gain
from bjpa.settings import settings
from bjpa.steady_state import operating_point
from bjpa.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

INTEGER_AXES = ("n_quartons", "m_slaves")
CONTINUOUS_AXES = ("alpha_c", "flux_bias", "pump_power_dbm")
FEASIBILITY_MARGIN_DB = 0.1
GOLDEN_TOL = 1e-4

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQ = (3 - math.sqrt(5)) / 2

Objective = Tuple[float, float, float, float]


@dataclass
class Candidate:
    """One evaluated design point"""
    params: Dict[str, float]
    gain_db: Optional[float] = None
    p1db_dbm: Optional[float] = None
    pump_power_dbm: Optional[float] = None
    feasible: bool = False
    junctions: int = 0
    error: Optional[str] = None

    @property
    def objective(self) -> Objective:
        """Ordering key: feasibility, then P1dB, then gain, then fewer junctions"""
        if self.feasible:
            p1db = math.inf if self.p1db_dbm is None else self.p1db_dbm
            return (1.0, p1db, self.gain_db, -self.junctions)
        gain = -math.inf if self.gain_db is None else self.gain_db
        return (0.0, gain, 0.0, -self.junctions)

    def to_record(self) -> Dict[str, Any]:
        return {
            **self.params,
            "gain_db": self.gain_db,
            "p1db_dbm": self.p1db_dbm,
            "pump_power_dbm": self.pump_power_dbm,
            "feasible": self.feasible,
            "junctions": self.junctions,
            "error": self.error,
        }


@dataclass
class TraceEntry:
    step: int
    phase: str
    axis: Optional[str]
    candidate: Candidate

    def to_dict(self) -> Dict[str, Any]:
        return {"step": self.step, "phase": self.phase, "axis": self.axis, **self.candidate.to_record()}


@dataclass
class OptimizationResult:
    best: Optional[Candidate]
    best_gain: Optional[Candidate]
    trace: List[TraceEntry] = field(default_factory=list)
    evaluations: int = 0
    lattice_size: int = 0
    exhaustive_seed: bool = False

    @property
    def feasible(self) -> bool:
        return self.best is not None

    def summary(self) -> Dict[str, Any]:
        return {
            "feasible": self.feasible,
            "best": self.best.to_record() if self.best else None,
            "best_gain_db": self.best_gain.gain_db if self.best_gain else None,
            "evaluations": self.evaluations,
            "lattice_size": self.lattice_size,
            "exhaustive_seed": self.exhaustive_seed,
        }


class DesignEvaluator:
    """Objective evaluation with memoization; repeated points do not count against the budget"""

    def __init__(self, base_design: BlochniumDesign, scale: PhysicalScale, min_gain_db: float,
                 delta: float, ceiling_dbm: float):
        self.base_design = base_design
        self.scale = scale
        self.min_gain_db = min_gain_db
        self.delta = delta
        self.ceiling_dbm = ceiling_dbm
        self.cache: Dict[Tuple, Candidate] = {}

    @staticmethod
    def key(params: Dict[str, float]) -> Tuple:
        return tuple(sorted((name, float(value)) for name, value in params.items()))

    def design_for(self, params: Dict[str, float]) -> BlochniumDesign:
        changes = {name: params[name] for name in ("alpha_c", "flux_bias") if name in params}
        for name in INTEGER_AXES:
            if name in params:
                changes[name] = int(params[name])
        return self.base_design.replace(**changes)

    def compute(self, params: Dict[str, float]) -> Candidate:
        design = self.design_for(params)
        candidate = Candidate(params=dict(params), junctions=design.n_quartons * design.m_slaves)
        try:
            model = tuned_model(design)
            if "pump_power_dbm" in params:
                pump = params["pump_power_dbm"]
            else:
                pump = pump_power_for_gain(model, self.scale, self.delta, self.min_gain_db)
            candidate.pump_power_dbm = pump
            op = operating_point(drive_from_power(pump, self.scale, model, self.delta))
            candidate.gain_db = gain_at(op, 0.0).g_signal_db
            if op.stable and candidate.gain_db >= self.min_gain_db - FEASIBILITY_MARGIN_DB:
                result = compression_point(model, self.scale, pump, self.delta, self.ceiling_dbm)
                candidate.p1db_dbm = result.p1db_dbm
                candidate.feasible = True
        except BJPAError as exc:
            candidate.error = f"{type(exc).__name__}: {exc.message}"
        return candidate

    def evaluate_many(self, points: List[Dict[str, float]], pool: WorkerPool) -> List[Candidate]:
        missing = []
        for params in points:
            key = self.key(params)
            if key not in self.cache and all(key != self.key(p) for p in missing):
                missing.append(params)
        if missing:
            outcomes = pool.map_ordered(self.compute, missing)
            for params, outcome in zip(missing, outcomes):
                candidate = outcome.value if outcome.ok else Candidate(params=dict(params), error=outcome.error.message)
                self.cache[self.key(params)] = candidate
        return [self.cache[self.key(params)] for params in points]

    @property
    def evaluations(self) -> int:
        return len(self.cache)


def _validate_bounds(bounds: Dict[str, Tuple[float, float]]) -> None:
    if not bounds:
        raise ConfigurationError("optimizer needs at least one bounded parameter")
    for name, (low, high) in bounds.items():
        if name not in INTEGER_AXES + CONTINUOUS_AXES:
            raise ConfigurationError(f"bounds: unknown parameter '{name}'")
        if not (math.isfinite(low) and math.isfinite(high)) or low > high:
            raise ConfigurationError(f"bounds.{name}: need finite low <= high, got ({low}, {high})")
        if name in INTEGER_AXES and low < 1:
            raise ConfigurationError(f"bounds.{name}: lower bound must be >= 1")
        if name == "flux_bias" and max(abs(low), abs(high)) >= math.pi / 2:
            raise ConfigurationError("bounds.flux_bias: must stay inside (-pi/2, pi/2)")


def parameter_lattice(bounds: Dict[str, Tuple[float, float]], lattice_points: int) -> Dict[str, List[float]]:
    """Integer axes list their integers; continuous axes get evenly spaced values"""
    lattice = {}
    for name, (low, high) in bounds.items():
        if name in INTEGER_AXES:
            lattice[name] = [float(v) for v in range(int(math.ceil(low)), int(math.floor(high)) + 1)]
        elif low == high:
            lattice[name] = [float(low)]
        else:
            lattice[name] = np.linspace(low, high, lattice_points).tolist()
    return lattice


def latin_hypercube_points(bounds: Dict[str, Tuple[float, float]], count: int,
                           seed: int) -> List[Dict[str, float]]:
    names = list(bounds)
    sampler = qmc.LatinHypercube(d=len(names), seed=np.random.default_rng(seed))
    unit = sampler.random(count)
    points = []
    for row in unit:
        params = {}
        for name, u in zip(names, row):
            low, high = bounds[name]
            value = low + u * (high - low)
            params[name] = float(round(value)) if name in INTEGER_AXES else float(value)
        points.append(params)
    return points


def golden_section(objective: Callable[[float], Objective], low: float, high: float,
                   tol: float) -> float:
    """Maximize a comparable objective over [low, high]"""
    dist = high - low
    if dist <= tol:
        return 0.5 * (low + high)
    iterations = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))

    c = low + INV_PHI_SQ * dist
    d = low + INV_PHI * dist
    yc = objective(c)
    yd = objective(d)
    for _ in range(iterations - 1):
        if yc > yd:
            high, d, yd = d, c, yc
            dist *= INV_PHI
            c = low + INV_PHI_SQ * dist
            yc = objective(c)
        else:
            low, c, yc = c, d, yd
            dist *= INV_PHI
            d = low + INV_PHI * dist
            yd = objective(d)
    return 0.5 * (low + d) if yc > yd else 0.5 * (c + high)


def optimize_design(base_design: BlochniumDesign, scale: PhysicalScale, min_gain_db: float,
                    bounds: Dict[str, Tuple[float, float]], budget: int = 200,
                    seed: Optional[int] = None, delta: float = -0.8, lattice_points: int = 5,
                    ceiling_dbm: float = -60.0, pool: Optional[WorkerPool] = None) -> OptimizationResult:
    """Best feasible design by P1dB; an infeasible run reports the highest gain seen instead"""
    if budget < 27:
        raise ConfigurationError(f"budget must be >= 27, got {budget}")
    _validate_bounds(bounds)
    seed = settings.default_seed if seed is None else seed
    pool = pool or WorkerPool(max_workers=1)
    evaluator = DesignEvaluator(base_design, scale, min_gain_db, delta, ceiling_dbm)

    lattice = parameter_lattice(bounds, lattice_points)
    lattice_size = math.prod(len(values) for values in lattice.values())
    exhaustive = lattice_size <= budget // 2
    if exhaustive:
        names = list(lattice)
        seeds = [dict(zip(names, combo)) for combo in itertools.product(*(lattice[n] for n in names))]
    else:
        seeds = latin_hypercube_points(bounds, max(1, budget // 3), seed)

    candidates = evaluator.evaluate_many(seeds, pool)
    current = max(candidates, key=lambda c: c.objective)
    trace = [TraceEntry(step=0, phase="seed", axis=None, candidate=current)]
    logger.info("Optimizer seeded", extra={
        "event_type": "optimizer_seeded", "seeds": len(seeds), "lattice_size": lattice_size,
        "exhaustive": exhaustive, "objective": list(current.objective),
    })

    improved = True
    while improved and evaluator.evaluations < budget:
        improved = False
        for name, (low, high) in bounds.items():
            if evaluator.evaluations >= budget or low == high:
                continue
            if name in INTEGER_AXES:
                value = current.params[name]
                neighbors = [value + step for step in (-1.0, 1.0) if low <= value + step <= high]
                options = evaluator.evaluate_many(
                    [{**current.params, name: v} for v in neighbors], pool)
            else:
                def along_axis(value: float, axis: str = name) -> Objective:
                    return evaluator.evaluate_many([{**current.params, axis: value}], pool)[0].objective

                golden_section(along_axis, low, high, GOLDEN_TOL * (high - low))
                options = [candidate for candidate in evaluator.cache.values()
                           if _differs_only_in(candidate.params, current.params, name)]
            if not options:
                continue
            challenger = max(options, key=lambda c: c.objective)
            if challenger.objective > current.objective:
                current = challenger
                improved = True
                trace.append(TraceEntry(step=len(trace), phase="descent", axis=name, candidate=current))

    best = current if current.feasible else None
    best_gain = max(evaluator.cache.values(),
                    key=lambda c: -math.inf if c.gain_db is None else c.gain_db)
    result = OptimizationResult(best=best, best_gain=best_gain, trace=trace,
                                evaluations=evaluator.evaluations, lattice_size=lattice_size,
                                exhaustive_seed=exhaustive)
    if best is None:
        logger.warning("No feasible design within budget", extra={
            "event_type": "optimizer_infeasible", "min_gain_db": min_gain_db,
            "best_gain_db": best_gain.gain_db,
        })
    else:
        logger.info("Optimizer finished", extra={
            "event_type": "optimizer_finished", "evaluations": evaluator.evaluations,
            "p1db_dbm": best.p1db_dbm, "gain_db": best.gain_db,
        })
    return result


def _differs_only_in(params: Dict[str, float], reference: Dict[str, float], axis: str) -> bool:
    if params.keys() != reference.keys():
        return False
    return all(params[name] == reference[name] for name in params if name != axis)
