"""Strict JSON configuration.

Every frequency is nu = omega/2pi in MHz, times are in ns, angles in radians
and squeezing powers in dB.  An empty document resolves to the first row of
the fidelity table: delta_r = 320 MHz, kappa = 10 MHz, chi = 8 MHz,
eps0 = 796 MHz, 16 dB of squeezing at theta = 0 with a 32 MHz bandwidth.
"""

import hashlib
import json
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .analytic import SqueezeParams
from .cascaded import DpaParams
from .trajectory import DriveParams, SystemParams

SCHEMA = "ripsqueeze.config/1"


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class SystemSection(_Strict):
    nu_r: float = Field(7000.0, gt=0, description="cavity frequency, MHz")
    nu_a: float = Field(10200.0, gt=0, description="qubit frequency, MHz")
    g: float = Field(160.0, gt=0, description="qubit-cavity coupling, MHz")
    kappa: float = Field(10.0, gt=0, description="cavity linewidth, MHz")
    delta_r: float = Field(320.0, description="cavity minus drive frequency, MHz")

    @field_validator("delta_r")
    @classmethod
    def _nonzero(cls, v):
        if v == 0:
            raise ValueError("delta_r must be nonzero")
        return v


class DriveSection(_Strict):
    eps0: float = Field(796.0, ge=0, description="peak drive amplitude, MHz")
    tau: float = Field(40.0, gt=0, description="Gaussian width, ns (gate time 5 tau)")


class SqueezeSection(_Strict):
    db: float = Field(16.0, ge=0, description="squeezing power, dB")
    theta: float = Field(0.0, description="squeezing angle relative to the drive, rad")
    gamma_bw: float = Field(32.0, gt=0, description="squeezing bandwidth, MHz")
    efficiency: float = Field(1.0, ge=0, le=1, description="transmission of the squeezed input")


class DpaSection(_Strict):
    gamma_b: float = Field(32.0, gt=0, description="source linewidth, MHz")
    pump: float | None = Field(None, ge=0, description="pump amplitude, MHz; null derives it from squeeze.db")

    @model_validator(mode="after")
    def _below_threshold(self):
        if self.pump is not None and self.pump >= self.gamma_b / 2:
            raise ValueError(f"pump {self.pump} MHz is at or above threshold gamma_b/2 = {self.gamma_b / 2} MHz")
        return self


class NumericsSection(_Strict):
    dt_trajectory: float = Field(0.005, gt=0, description="trajectory step, ns")
    dt_cascaded: float = Field(0.02, gt=0, description="master-equation step, ns")
    n_cav: int = Field(4, ge=2, description="cavity Fock levels (displaced frame)")
    n_src: int = Field(10, ge=2, description="source Fock levels (squeezed basis)")


class SweepSection(_Strict):
    axis: Literal["db", "theta", "delta_r"] = "db"
    grid: list[float] = Field(default_factory=lambda: [float(v) for v in range(21)])


class Config(_Strict):
    schema_: Literal["ripsqueeze.config/1"] = Field(SCHEMA, alias="schema")
    system: SystemSection = Field(default_factory=SystemSection)
    drive: DriveSection = Field(default_factory=DriveSection)
    squeeze: SqueezeSection = Field(default_factory=SqueezeSection)
    dpa: DpaSection = Field(default_factory=DpaSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    sweep: SweepSection = Field(default_factory=SweepSection)

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False, populate_by_name=True)

    def system_params(self):
        return SystemParams(**self.system.model_dump())

    def drive_params(self):
        return DriveParams(**self.drive.model_dump())

    def squeeze_params(self):
        return SqueezeParams(**self.squeeze.model_dump())

    def dpa_params(self):
        """Source parameters; an explicit pump wins over the squeezing power."""
        if self.dpa.pump is not None:
            return DpaParams(gamma_b=self.dpa.gamma_b, pump=self.dpa.pump, theta=-self.squeeze.theta)
        from .experiments import cascaded_pump

        return cascaded_pump(self.squeeze_params(), self.dpa.gamma_b)


def _path(loc):
    parts = [str(p) for p in loc if p not in ("function-after",)]
    return ".".join("schema" if p == "schema_" else p for p in parts)


def parse_config(document):
    """Resolve a JSON text, bytes or mapping into a Config with defaults applied."""
    if isinstance(document, (str, bytes)):
        text = document.strip() if isinstance(document, str) else document.strip().decode()
        try:
            document = json.loads(text) if text else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        cfg = Config.model_validate(document)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(err["msg"], path=_path(err["loc"])) from exc
    try:
        cfg.system_params()
    except ValueError as exc:
        raise ConfigError(str(exc), path="system") from exc
    return cfg


def load_config(path=None):
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)


def emit_config(cfg):
    """Resolved document as a plain dict (the audit echo)."""
    return cfg.model_dump(mode="json", by_alias=True)


def config_hash(cfg):
    """SHA-256 of the canonical resolved document."""
    canon = json.dumps(emit_config(cfg), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def parse_grid(spec):
    """Grid from ``axis=start:stop:step`` (stop inclusive) or ``axis=v1,v2,...``.

    The axis prefix is optional; returns (axis or None, values).
    """
    axis = None
    if "=" in spec:
        axis, spec = spec.split("=", 1)
        axis = axis.strip()
        if axis not in ("db", "theta", "delta_r"):
            raise ConfigError(f"unknown sweep axis {axis!r}", path="sweep.axis")
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step == 0 or (stop - start) / step < 0:
                raise ConfigError("grid step must be nonzero and point from start to stop", path="sweep.grid")
            n = int(math.floor((stop - start) / step + 1e-9))
            values = [start + k * step for k in range(n + 1)]
        else:
            values = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {spec!r}", path="sweep.grid") from exc
    if not values:
        raise ConfigError("grid is empty", path="sweep.grid")
    return axis, values
