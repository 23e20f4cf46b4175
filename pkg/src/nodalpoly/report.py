"""Deterministic JSON reports and the verification summary."""

from __future__ import annotations

import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def jsonable(obj):
    """Plain JSON values; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def environment():
    import matplotlib
    import scipy

    return {
        "python": platform.python_version(),
        "implementation": sys.implementation.name,
        "machine": platform.machine(),
        "system": platform.system(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


@dataclass
class VerificationReport:
    config: dict
    checks: list
    environment: dict = field(default_factory=environment)

    @property
    def failed(self):
        return [c for c in self.checks if c.status == "fail"]

    @property
    def exit_code(self):
        return 1 if self.failed else 0

    def summary(self):
        out = {"pass": 0, "fail": 0, "skipped": 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    def as_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config,
            "environment": self.environment,
            "checks": [c.as_dict() for c in self.checks],
            "summary": self.summary(),
        }

    def timing(self):
        return {c.name: c.seconds for c in self.checks}

    def write(self, out):
        out = Path(out)
        write_json(out / "report.json", self.as_dict())
        write_json(out / "timing.json", self.timing())
        return out / "report.json"

    def lines(self):
        for c in self.checks:
            extra = f" ({c.reason})" if c.reason else ""
            yield f"{c.status.upper():8s} {c.module:16s} {c.name}{extra}"
