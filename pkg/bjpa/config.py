"""
Run configuration: strict JSON schema for every command, loaded through ConfigManager
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from bjpa.circuit import BlochniumDesign
from bjpa.errors import ConfigurationError
from bjpa.metrics import PhysicalScale
from bjpa.steady_state import CRITICAL_ZETA, BranchPolicy

logger = logging.getLogger(__name__)

DEFAULT_ZETA_LADDER = [0.0, 0.01, 0.1, 0.4, 0.8, 0.95]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Grid(StrictModel):
    """Either explicit values or an inclusive linspace; a bare list is shorthand for values"""
    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _from_list(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"values": list(data)}
        return data

    @model_validator(mode="after")
    def _check_form(self) -> "Grid":
        ranged = (self.start, self.stop, self.num)
        if self.values is not None:
            if any(v is not None for v in ranged):
                raise ValueError("give either values or start/stop/num, not both")
            if not self.values:
                raise ValueError("values must not be empty")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("values must be finite")
        elif any(v is None for v in ranged):
            raise ValueError("start, stop and num are all required without values")
        return self

    def to_list(self) -> List[float]:
        if self.values is not None:
            return list(self.values)
        return np.linspace(self.start, self.stop, self.num).tolist()


class DesignConfig(StrictModel):
    """Circuit parameters; SI units except kappa, given as an ordinary frequency"""
    n_quartons: int = Field(ge=1)
    m_slaves: int = Field(ge=1)
    alpha_c: float = Field(ge=0)
    e_js: float = Field(gt=0)
    c_g: float = Field(gt=0)
    c_js: float = Field(gt=0)
    c_jm: float = Field(gt=0)
    z0: float = Field(default=50.0, gt=0)
    kappa_mhz: float = Field(gt=0)
    flux_bias: float = 0.0
    e_c_override: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_flux(self) -> "DesignConfig":
        if not abs(self.flux_bias) < math.pi / 2:
            raise ValueError("flux_bias must satisfy |flux_bias| < pi/2")
        return self

    def to_design(self) -> BlochniumDesign:
        return BlochniumDesign(
            n_quartons=self.n_quartons,
            m_slaves=self.m_slaves,
            alpha_c=self.alpha_c,
            e_js=self.e_js,
            c_g=self.c_g,
            c_js=self.c_js,
            c_jm=self.c_jm,
            z0=self.z0,
            kappa=2 * math.pi * self.kappa_mhz * 1e6,
            flux_bias=self.flux_bias,
            e_c_override=self.e_c_override,
        )


class DesignPatch(StrictModel):
    """Partial design applied on top of the base design"""
    name: Optional[str] = None
    n_quartons: Optional[int] = Field(default=None, ge=1)
    m_slaves: Optional[int] = Field(default=None, ge=1)
    alpha_c: Optional[float] = Field(default=None, ge=0)
    e_js: Optional[float] = Field(default=None, gt=0)
    c_g: Optional[float] = Field(default=None, gt=0)
    c_js: Optional[float] = Field(default=None, gt=0)
    c_jm: Optional[float] = Field(default=None, gt=0)
    z0: Optional[float] = Field(default=None, gt=0)
    kappa_mhz: Optional[float] = Field(default=None, gt=0)
    flux_bias: Optional[float] = None
    e_c_override: Optional[float] = Field(default=None, gt=0)

    def apply(self, base: DesignConfig) -> DesignConfig:
        changes = self.model_dump(exclude_none=True, exclude={"name"})
        return DesignConfig.model_validate({**base.model_dump(), **changes})

    def label(self) -> str:
        if self.name:
            return self.name
        changes = self.model_dump(exclude_none=True, exclude={"name"})
        return ",".join(f"{key}={value}" for key, value in changes.items()) or "base"


class ScaleConfig(StrictModel):
    pump_frequency_ghz: float = Field(default=6.0, gt=0)


class PhotonNumberConfig(StrictModel):
    delta: Grid = Field(default_factory=lambda: Grid(start=-3.0, stop=3.0, num=121))
    zeta: Grid = Field(default_factory=lambda: Grid(values=DEFAULT_ZETA_LADDER))
    zeta_units: Literal["absolute", "threshold"] = "threshold"


class GainConfig(StrictModel):
    delta: Grid = Field(default_factory=lambda: Grid(start=-3.0, stop=3.0, num=121))
    zeta: Grid = Field(default_factory=lambda: Grid(values=DEFAULT_ZETA_LADDER[1:]))
    zeta_units: Literal["absolute", "threshold"] = "threshold"
    big_delta: Grid = Field(default_factory=lambda: Grid(start=-3.0, stop=3.0, num=121))
    pump_phase: float = 0.0
    branch: Literal["low_stable", "high_stable"] = "low_stable"

    @property
    def policy(self) -> BranchPolicy:
        return BranchPolicy(self.branch)


class P1dBConfig(StrictModel):
    delta: float = -0.8
    gain_target_db: float = 20.0
    pump_power_dbm: Optional[Grid] = None
    ceiling_dbm: float = -60.0
    variants: List[DesignPatch] = Field(default_factory=list)


class TuneConfig(StrictModel):
    band_ghz: Tuple[float, float] = (4.0, 8.0)
    n_points: int = Field(default=10, ge=1)
    delta: float = -0.8
    gain_target_db: float = 20.0
    max_flux_bias: float = Field(default=1.5, gt=0, lt=math.pi / 2)


class CompareConfig(StrictModel):
    design_b: DesignPatch = Field(default_factory=DesignPatch)
    gain_target_db: float = 20.0
    delta: float = -0.8
    ceiling_dbm: float = -60.0


class SweepAxisConfig(StrictModel):
    name: str
    values: Grid


class SweepConfig(StrictModel):
    axes: List[SweepAxisConfig] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=lambda: ["n", "stable", "gain_db"])
    delta: float = -0.8
    pump_phase: float = 0.0
    pump_power_dbm: Optional[float] = None
    gain_target_db: float = 20.0
    ceiling_dbm: float = -60.0


class OptimizeConfig(StrictModel):
    min_gain_db: float = 20.0
    bounds: Dict[str, Tuple[float, float]] = Field(default_factory=lambda: {"alpha_c": (0.0, 0.9)})
    budget: int = Field(default=200, ge=27)
    seed: Optional[int] = None
    delta: float = -0.8
    lattice_points: int = Field(default=5, ge=2)
    ceiling_dbm: float = -60.0


class OutputConfig(StrictModel):
    directory: str = "results"
    formats: List[Literal["csv", "json", "svg"]] = Field(default_factory=lambda: ["csv", "json"])


class RunConfig(StrictModel):
    design: DesignConfig
    scale: ScaleConfig = Field(default_factory=ScaleConfig)
    photon_number: PhotonNumberConfig = Field(default_factory=PhotonNumberConfig)
    gain: GainConfig = Field(default_factory=GainConfig)
    p1db: P1dBConfig = Field(default_factory=P1dBConfig)
    tune: TuneConfig = Field(default_factory=TuneConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    optimize: OptimizeConfig = Field(default_factory=OptimizeConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


def format_validation_error(exc: ValidationError) -> str:
    """One '<dotted.path>: <message>' line per error"""
    lines = []
    for error in exc.errors():
        path = ".".join(str(part) for part in error["loc"]) or "<root>"
        lines.append(f"{path}: {error['msg']}")
    return "\n".join(lines)


def zeta_values(grid: Grid, units: str) -> List[float]:
    """Threshold units are multiples of zeta_0 = -1/sqrt(27)"""
    values = grid.to_list()
    if units == "threshold":
        return [-CRITICAL_ZETA * v for v in values]
    return values


class ConfigManager:
    """Loads and validates a run configuration file"""

    def __init__(self, config_file: str):
        self.config_file = Path(config_file)
        self.raw: Dict[str, Any] = {}
        self.sha256 = ""
        self.config = self._load_config()

    def _load_config(self) -> RunConfig:
        try:
            payload = self.config_file.read_bytes()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {self.config_file}: {exc}") from exc
        self.sha256 = hashlib.sha256(payload).hexdigest()
        try:
            self.raw = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"{self.config_file}: invalid JSON: {exc}") from exc
        config = self.validate(self.raw)
        logger.info("Configuration loaded", extra={
            "event_type": "config_loaded", "path": str(self.config_file), "sha256": self.sha256,
        })
        return config

    @staticmethod
    def validate(data: Dict[str, Any]) -> RunConfig:
        try:
            config = RunConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigurationError(format_validation_error(exc)) from exc
        errors = config.design.to_design().validate()
        if errors:
            raise ConfigurationError("\n".join(f"design: {error}" for error in errors))
        return config

    def get_config(self) -> RunConfig:
        return self.config

    def design(self) -> BlochniumDesign:
        return self.config.design.to_design()

    def patched_design(self, patch: DesignPatch) -> BlochniumDesign:
        try:
            return patch.apply(self.config.design).to_design()
        except ValidationError as exc:
            raise ConfigurationError(format_validation_error(exc)) from exc

    def scale(self) -> PhysicalScale:
        return PhysicalScale(
            omega_p=2 * math.pi * self.config.scale.pump_frequency_ghz * 1e9,
            kappa=2 * math.pi * self.config.design.kappa_mhz * 1e6,
        )
