"""Result persistence: full-precision CSV, JSON records and the run manifest."""

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__

SWEEP_COLUMNS = ("engine", "delta_r_mhz", "db", "theta_rad", "error", "f_avg", "gamma_00_11", "mu_zz", "failure")


def _fmt(v):
    # repr() of a float is the shortest round-tripping form (17 significant digits at most)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


def write_rows(path, rows, columns):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def write_sweep_csv(path, records):
    return write_rows(path, [r.row() for r in records], SWEEP_COLUMNS)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2))
    return path


@dataclass
class ResultManifest:
    config_hash: str
    config_path: str | None
    outputs: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    command: str = ""
    tool_version: str = __version__

    def write(self, directory):
        """Write ``manifest.json`` atomically into ``directory``."""
        directory = Path(directory)
        fd, tmp = tempfile.mkstemp(prefix=".manifest-", suffix=".json", dir=directory)
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(_jsonable(asdict(self)), fh, indent=2)
            final = directory / "manifest.json"
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return final

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))
