"""
Command-line front end

    bjpa <command> --config <path> [--out <dir>] [--formats csv,json,svg] [--workers N] [--seed N]

Exit codes: 0 success, 1 computation error, 2 configuration or validation error.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from bjpa import __version__
from bjpa.circuit import build_matrices, estimate_kappa, mode_spectrum, quarton_inductance, tuned_model
from bjpa.config import ConfigManager, RunConfig, zeta_values
from bjpa.errors import BJPAError, ConfigurationError, ErrorDetail
from bjpa.gain import SignalProbe, gain_curve, gain_map
from bjpa.logging_config import setup_logging
from bjpa.metrics import (
    band_coverage,
    compare_designs,
    compression_point,
    pump_power_for_gain,
)
from bjpa.optimizer import optimize_design
from bjpa.reporting import ReportWriter, heat_figure, line_figure
from bjpa.settings import settings
from bjpa.steady_state import (
    PumpDrive,
    bifurcation_threshold,
    operating_point,
    photon_number_roots,
    pump_reflection,
)
from bjpa.sweep import SweepSpec, run_sweep
from bjpa.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")
HEADLINE_P1DB_DBM = -92.0


@dataclass
class CommandContext:
    manager: ConfigManager
    writer: ReportWriter
    pool: WorkerPool
    seed: Optional[int] = None

    @property
    def config(self) -> RunConfig:
        return self.manager.get_config()


def _emit(ctx: CommandContext, rows: List[Dict[str, Any]], summary: Dict[str, Any],
          columns: Optional[Sequence[str]] = None, json_records: Optional[List[Dict[str, Any]]] = None,
          figure_factory: Optional[Callable[[], Any]] = None) -> None:
    ctx.writer.write_csv(rows, columns)
    ctx.writer.write_json(json_records if json_records is not None else rows, summary)
    if figure_factory is not None and ctx.writer.wants("svg"):
        ctx.writer.write_svg(figure_factory())
    for key, value in summary.items():
        if not isinstance(value, (dict, list)):
            print(f"{key}: {value}")


def cmd_model(ctx: CommandContext) -> None:
    design = ctx.manager.design()
    model = tuned_model(design)
    record = {
        "n_quartons": design.n_quartons,
        "m_slaves": design.m_slaves,
        "alpha_c": design.alpha_c,
        "flux_bias": design.flux_bias,
        "node_count": design.node_count,
        "junction_count": design.junction_count,
        "quarton_inductance_nh": quarton_inductance(design) * 1e9,
        **model.to_dict(),
        "kappa_estimate_mhz": estimate_kappa(design, model.omega_eff) / (2 * math.pi) / 1e6,
    }

    def figure():
        spectrum = mode_spectrum(build_matrices(design), count=10) / (2 * math.pi) / 1e9
        return line_figure({"modes": (list(range(1, len(spectrum) + 1)), spectrum)},
                           "mode index", "frequency (GHz)", "Lowest chain modes")

    _emit(ctx, [record], {"kerr_sign": int(np.sign(model.kerr_k))}, figure_factory=figure)


def cmd_photon_number(ctx: CommandContext) -> None:
    cfg = ctx.config.photon_number
    deltas = cfg.delta.to_list()
    zetas = zeta_values(cfg.zeta, cfg.zeta_units)

    def curve(zeta: float) -> List[Dict[str, Any]]:
        rows = []
        for delta in deltas:
            drive = PumpDrive(delta=delta, zeta=zeta)
            roots = photon_number_roots(drive)
            for index, root in enumerate(roots.roots):
                reflection = pump_reflection(drive, root.n)
                rows.append({"delta": delta, "zeta": zeta, "root_index": index, "n": root.n,
                             "stable": root.stable, "bistable": roots.bistable,
                             "reflection_abs": abs(reflection),
                             "reflection_phase": math.atan2(reflection.imag, reflection.real)})
        return rows

    rows = []
    for outcome in ctx.pool.map_ordered(curve, zetas):
        if not outcome.ok:
            raise BJPAError(outcome.error.message, outcome.error.context)
        rows.extend(outcome.value)

    def figure():
        series = {}
        for zeta in zetas:
            lowest = [r for r in rows if r["zeta"] == zeta and r["root_index"] == 0]
            series[f"zeta={zeta:.4g}"] = ([r["delta"] for r in lowest], [r["n"] for r in lowest])
        return line_figure(series, "pump detuning delta", "photon number n", "Steady-state photon number")

    summary = {
        "rows": len(rows),
        "bistable_rows": sum(1 for r in rows if r["bistable"]),
        "critical_zeta": bifurcation_threshold(verify=False),
    }
    _emit(ctx, rows, summary,
          columns=["delta", "zeta", "root_index", "n", "stable", "bistable",
                   "reflection_abs", "reflection_phase"], figure_factory=figure)


def cmd_gain(ctx: CommandContext) -> None:
    cfg = ctx.config.gain
    deltas = cfg.delta.to_list()
    zetas = zeta_values(cfg.zeta, cfg.zeta_units)
    probes = [SignalProbe(v) for v in cfg.big_delta.to_list()]
    drives = [PumpDrive(delta=d, zeta=z, pump_phase=cfg.pump_phase) for z in zetas for d in deltas]
    points = gain_map(drives, probes, cfg.policy, ctx.pool)
    rows = [point.to_record() for point in points]

    finite = [r for r in rows if not r["saturated"]]
    peak = max(finite, key=lambda r: r["g_signal_db"]) if finite else None

    def figure():
        if len(zetas) == 1 and len(probes) > 1:
            grid = np.array([r["g_signal_db"] for r in rows]).reshape(len(deltas), len(probes)).T
            return heat_figure(deltas, [p.big_delta for p in probes], grid,
                               "pump detuning delta", "signal detuning Delta", "signal gain (dB)",
                               f"zeta={zetas[0]:.4g}")
        centre = min(range(len(probes)), key=lambda i: abs(probes[i].big_delta))
        series, markers = {}, []
        for zeta in zetas:
            chosen = [r for r in rows if r["zeta"] == zeta and r["big_delta"] == probes[centre].big_delta]
            series[f"zeta={zeta:.4g}"] = ([r["delta"] for r in chosen], [r["g_signal_db"] for r in chosen])
            markers.extend((r["delta"], r["g_signal_db"]) for r in chosen if r["saturated"])
        return line_figure(series, "pump detuning delta", "signal gain (dB)",
                           f"Delta={probes[centre].big_delta:.4g}", markers=markers)

    summary = {
        "points": len(rows),
        "saturated_points": len(rows) - len(finite),
        "peak_gain_db": peak["g_signal_db"] if peak else None,
        "peak_delta": peak["delta"] if peak else None,
        "peak_big_delta": peak["big_delta"] if peak else None,
        "peak_zeta": peak["zeta"] if peak else None,
    }
    _emit(ctx, rows, summary,
          columns=["delta", "zeta", "big_delta", "n", "stable", "g_signal_db", "g_idler_db", "saturated"],
          figure_factory=figure)


def cmd_p1db(ctx: CommandContext) -> None:
    cfg = ctx.config.p1db
    scale = ctx.manager.scale()
    variants = [("base", ctx.manager.design())]
    variants += [(patch.label(), ctx.manager.patched_design(patch)) for patch in cfg.variants]
    pumps = cfg.pump_power_dbm.to_list() if cfg.pump_power_dbm is not None else [None]
    tasks = [(label, design, pump) for label, design in variants for pump in pumps]

    def evaluate(task) -> Dict[str, Any]:
        label, design, pump = task
        model = tuned_model(design)
        if pump is None:
            pump = pump_power_for_gain(model, scale, cfg.delta, cfg.gain_target_db)
        result = compression_point(model, scale, pump, cfg.delta, cfg.ceiling_dbm)
        return {"variant": label, "n_quartons": design.n_quartons, "m_slaves": design.m_slaves,
                "alpha_c": design.alpha_c, **result.to_dict(), "error": None}

    rows = []
    for task, outcome in zip(tasks, ctx.pool.map_ordered(evaluate, tasks)):
        if outcome.ok:
            rows.append(outcome.value)
            continue
        label, design, pump = task
        rows.append({"variant": label, "n_quartons": design.n_quartons, "m_slaves": design.m_slaves,
                     "alpha_c": design.alpha_c, "pump_power_dbm": pump, "p1db_dbm": None,
                     "error": outcome.error.marker})

    def figure():
        series = {}
        for label, _ in variants:
            chosen = [r for r in rows if r["variant"] == label and r.get("p1db_dbm") is not None]
            series[label] = ([r["pump_power_dbm"] for r in chosen], [r["p1db_dbm"] for r in chosen])
        return line_figure(series, "pump power (dBm)", "P1dB (dBm)", "Compression point")

    finite = [r["p1db_dbm"] for r in rows if r.get("p1db_dbm") is not None]
    summary = {
        "rows": len(rows),
        "best_p1db_dbm": max(finite) if finite else None,
        "headline_p1db_dbm": HEADLINE_P1DB_DBM,
        "failed_rows": sum(1 for r in rows if r["error"]),
    }
    columns = ["variant", "n_quartons", "m_slaves", "alpha_c", "pump_power_dbm", "small_signal_gain_db",
               "p1db_dbm", "open_ended", "converged", "gain_at_p1db_db", "ceiling_dbm", "error"]
    _emit(ctx, rows, summary, columns=columns, figure_factory=figure)


def cmd_tune(ctx: CommandContext) -> None:
    cfg = ctx.config.tune
    scale = ctx.manager.scale()
    curve = band_coverage(ctx.manager.design(), scale, cfg.band_ghz, cfg.n_points, cfg.delta,
                          cfg.gain_target_db, cfg.max_flux_bias)
    rows = []
    for index, point in enumerate(curve.points):
        overlap = curve.overlaps[index] if index < len(curve.overlaps) else False
        rows.append({**point.to_dict(), "overlaps_next": overlap})

    def figure():
        kappa_ghz = scale.kappa / (2 * math.pi) / 1e9
        series = {}
        for point in curve.points:
            op = operating_point(PumpDrive(delta=cfg.delta, zeta=point.zeta))
            half_width = 3 * (point.band_high_ghz - point.band_low_ghz) / kappa_ghz
            offsets = np.linspace(-half_width, half_width, 201)
            gains = [g.g_signal_db for g in gain_curve(op, [SignalProbe(o) for o in offsets])]
            pump_ghz = point.omega_eff_ghz + cfg.delta * kappa_ghz
            series[f"{point.omega_eff_ghz:.3f} GHz"] = (pump_ghz + offsets * kappa_ghz, gains)
        return line_figure(series, "signal frequency (GHz)", "signal gain (dB)", "Flux tuning")

    summary = {"covered": curve.covered, "any_overlap": curve.any_overlap,
               "band_low_ghz": cfg.band_ghz[0], "band_high_ghz": cfg.band_ghz[1], "points": len(rows)}
    _emit(ctx, rows, summary, figure_factory=figure)


def cmd_compare(ctx: CommandContext) -> None:
    cfg = ctx.config.compare
    record = compare_designs(ctx.manager.design(), ctx.manager.patched_design(cfg.design_b),
                             ctx.manager.scale(), cfg.gain_target_db, cfg.delta, cfg.ceiling_dbm)
    row = {"design_b": cfg.design_b.label(), **record.to_dict()}
    _emit(ctx, [row], {"difference_db": record.difference_db})


def cmd_optimize(ctx: CommandContext) -> None:
    cfg = ctx.config.optimize
    seed = ctx.seed if ctx.seed is not None else cfg.seed
    result = optimize_design(ctx.manager.design(), ctx.manager.scale(), cfg.min_gain_db,
                             {name: tuple(bound) for name, bound in cfg.bounds.items()},
                             budget=cfg.budget, seed=seed, delta=cfg.delta,
                             lattice_points=cfg.lattice_points, ceiling_dbm=cfg.ceiling_dbm, pool=ctx.pool)
    rows = [entry.to_dict() for entry in result.trace]
    if not result.feasible:
        print(f"no design reaches {cfg.min_gain_db} dB within the budget", file=sys.stderr)

    def figure():
        steps = [r["step"] for r in rows if r["p1db_dbm"] is not None]
        values = [r["p1db_dbm"] for r in rows if r["p1db_dbm"] is not None]
        return line_figure({"accepted moves": (steps, values)}, "step", "P1dB (dBm)", "Optimizer trace")

    _emit(ctx, rows, result.summary(), figure_factory=figure)


def cmd_sweep(ctx: CommandContext) -> None:
    cfg = ctx.config.sweep
    if not cfg.axes:
        raise ConfigurationError("sweep.axes: at least one axis is required")
    spec = SweepSpec(
        axes=[(axis.name, axis.values.to_list()) for axis in cfg.axes],
        outputs=list(cfg.outputs),
        base_design=ctx.manager.design(),
        pump_frequency_ghz=ctx.config.scale.pump_frequency_ghz,
        delta=cfg.delta,
        pump_phase=cfg.pump_phase,
        pump_power_dbm=cfg.pump_power_dbm,
        gain_target_db=cfg.gain_target_db,
        ceiling_dbm=cfg.ceiling_dbm,
    )
    records = run_sweep(spec, ctx.pool)
    rows = [record.to_row() for record in records]
    columns = [name for name, _ in spec.axes] + spec.outputs

    def figure():
        x_axis = spec.axes[-1][0]
        output = spec.outputs[0]
        series: Dict[str, Any] = {}
        for record in records:
            label = ", ".join(f"{k}={v:g}" for k, v in record.inputs.items() if k != x_axis) or output
            value = record.outputs.get(output)
            if output in record.errors or not isinstance(value, (int, float)):
                continue
            xs, ys = series.setdefault(label, ([], []))
            xs.append(record.inputs[x_axis])
            ys.append(float(value))
        return line_figure(series, x_axis, output, "Parameter sweep")

    summary = {"points": len(records), "points_with_errors": sum(1 for r in records if not r.ok)}
    _emit(ctx, rows, summary, columns=columns, json_records=[r.to_dict() for r in records],
          figure_factory=figure)


COMMANDS: Dict[str, Callable[[CommandContext], None]] = {
    "model": cmd_model,
    "photon-number": cmd_photon_number,
    "gain": cmd_gain,
    "p1db": cmd_p1db,
    "tune": cmd_tune,
    "compare": cmd_compare,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bjpa", description="Blochnium parametric amplifier simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--formats", help="comma-separated subset of csv,json,svg")
    parser.add_argument("--workers", type=int, help="worker threads (default: machine parallelism)")
    parser.add_argument("--seed", type=int, help="optimizer seed (overrides optimize.seed)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-format", choices=("json", "text"), default=None)
    return parser


def _formats(raw: Optional[str], configured: Sequence[str]) -> List[str]:
    if raw is None:
        return list(configured)
    formats = [item.strip() for item in raw.split(",") if item.strip()]
    unknown = [item for item in formats if item not in FORMATS]
    if unknown or not formats:
        raise ConfigurationError(f"--formats: expected a subset of {','.join(FORMATS)}, got '{raw}'")
    return formats


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.log_level, args.log_format or settings.log_format)

    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigurationError("--workers must be >= 1")
        manager = ConfigManager(args.config)
        config = manager.get_config()
        writer = ReportWriter(
            directory=args.out or config.output.directory,
            command=args.command,
            config_sha256=manager.sha256,
            formats=_formats(args.formats, config.output.formats),
            config_path=args.config,
        )
        ctx = CommandContext(manager=manager, writer=writer, pool=WorkerPool(args.workers), seed=args.seed)
        logger.info("Command started", extra={"event_type": "command_started", "command": args.command})
        COMMANDS[args.command](ctx)
        writer.write_manifest()
    except BJPAError as exc:
        detail = ErrorDetail.from_exception(exc)
        label = "configuration error" if isinstance(exc, ConfigurationError) else "error"
        print(f"{label}: {exc.message}", file=sys.stderr)
        logger.error("Command failed", extra={
            "event_type": "command_failed",
            "command": args.command,
            "error_type": detail.exception_type,
            "error_category": detail.category.value,
            "error_severity": detail.severity.value,
            "error_message": detail.message,
        })
        return exc.exit_code
    except Exception as exc:
        # numerical library failures (LinAlgError, ArpackNoConvergence, ...)
        detail = ErrorDetail.from_exception(exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        logger.error("Command failed", exc_info=True, extra={
            "event_type": "command_failed",
            "command": args.command,
            "error_type": detail.exception_type,
            "error_category": detail.category.value,
            "error_severity": detail.severity.value,
            "error_message": detail.message,
        })
        return 1

    logger.info("Command finished", extra={"event_type": "command_finished", "command": args.command,
                                           "artifacts": writer.artifacts})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
