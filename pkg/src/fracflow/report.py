"""Machine-readable run summaries.

Reports serialize deterministically: keys sorted, every float written with
17 significant digits.  Wall-clock timings vary from run to run, so they are
kept out of the report body and written to a separate file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""
    return _encode(obj, indent, 0) + "\n"


@dataclass
class RateFit:
    rate: float
    stderr: float
    ci_low: float
    ci_high: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "rate": self.rate,
            "stderr": self.stderr,
            "ci95": [self.ci_low, self.ci_high],
            "samples": self.samples,
        }


def fit_decay_rate(t, values) -> RateFit:
    """Least-squares exponential decay rate of ``values(t)`` with a 95% interval."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    t, logs = t[keep], np.log(values[keep])
    if t.size < 2:
        return RateFit(math.nan, math.nan, math.nan, math.nan, int(t.size))
    if t.size == 2:
        rate = -(logs[1] - logs[0]) / (t[1] - t[0])
        return RateFit(rate, 0.0, rate, rate, 2)
    fit = stats.linregress(t, logs)
    half = stats.t.ppf(0.975, t.size - 2) * fit.stderr
    rate = -fit.slope
    return RateFit(rate, fit.stderr, rate - half, rate + half, int(t.size))


@dataclass
class RunReport:
    command: str
    config: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = "ok"
    exit_code: int = 0

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    def as_dict(self, include_timings: bool = False) -> dict:
        out = {
            "command": self.command,
            "config": self.config,
            "series": self.series,
            "fits": self.fits,
            "scalars": self.scalars,
            "warnings": list(self.warnings),
            "status": self.status,
            "exit_code": self.exit_code,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings: bool = False) -> str:
        return dumps(self.as_dict(include_timings))

    def series_csv(self) -> str:
        """Time series as comma-separated columns, ``t`` first."""
        if not self.series:
            return ""
        names = sorted(self.series, key=lambda k: (k != "t", k))
        rows = [",".join(names)]
        for row in zip(*(self.series[k] for k in names)):
            rows.append(",".join(_fmt_float(float(v)) for v in row))
        return "\n".join(rows) + "\n"
