"""
Artifact writers: CSV tables, JSON reports, SVG plots and the per-run manifest
"""
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "bjpa"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from bjpa import __version__  # noqa: E402
from bjpa.errors import OutputError  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def json_safe(value: Any) -> Any:
    """Non-finite floats become null; numpy scalars become Python scalars"""
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def records_frame(rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns) if columns else None)


def line_figure(series: Dict[str, Tuple[Sequence[float], Sequence[float]]], xlabel: str, ylabel: str,
                title: str = "", markers: Optional[List[Tuple[float, float]]] = None):
    """One polyline per labelled series"""
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, label=label)
    if markers:
        ax.scatter([x for x, _ in markers], [y for _, y in markers], marker="x", color="black",
                   label="saturated")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(loc="best", fontsize=8)
    return fig


def heat_figure(x: Sequence[float], y: Sequence[float], z: np.ndarray, xlabel: str, ylabel: str,
                zlabel: str, title: str = ""):
    """z has shape (len(y), len(x))"""
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    mesh = ax.pcolormesh(x, y, z, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=zlabel)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return fig


class ReportWriter:
    """Writes one run's artifacts as <command>-<timestamp>.<ext> plus manifest.json"""

    def __init__(self, directory: str, command: str, config_sha256: str, formats: Sequence[str],
                 config_path: Optional[str] = None, timestamp: Optional[str] = None):
        self.directory = Path(directory)
        self.command = command
        self.config_sha256 = config_sha256
        self.formats = list(formats)
        self.config_path = config_path
        self.timestamp = timestamp or utc_timestamp()
        self.artifacts: List[str] = []

    @property
    def stem(self) -> str:
        return f"{self.command}-{self.timestamp}"

    def _path(self, extension: str) -> Path:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {self.directory}: {exc}") from exc
        return self.directory / f"{self.stem}.{extension}"

    def _record(self, path: Path) -> Path:
        self.artifacts.append(path.name)
        logger.info("Artifact written", extra={"event_type": "artifact_written", "path": str(path)})
        return path

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def write_csv(self, rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> Optional[Path]:
        if not self.wants("csv"):
            return None
        path = self._path("csv")
        frame = records_frame(rows, columns)
        try:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        return self._record(path)

    def write_json(self, records: Sequence[Dict[str, Any]], summary: Dict[str, Any]) -> Optional[Path]:
        if not self.wants("json"):
            return None
        path = self._path("json")
        envelope = {
            "command": self.command,
            "tool_version": __version__,
            "config_sha256": self.config_sha256,
            "records": json_safe(list(records)),
            "summary": json_safe(summary),
        }
        try:
            path.write_text(json.dumps(envelope, indent=2, allow_nan=False) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        return self._record(path)

    def write_svg(self, fig) -> Optional[Path]:
        if not self.wants("svg"):
            plt.close(fig)
            return None
        path = self._path("svg")
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        finally:
            plt.close(fig)
        return self._record(path)

    def write_manifest(self) -> Path:
        path = self.directory / "manifest.json"
        self.directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "config_path": self.config_path,
            "config_sha256": self.config_sha256,
            "timestamp": self.timestamp,
            "artifacts": list(self.artifacts),
        }
        try:
            path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        return path
