"""Runtime scaling of the three kernel evaluation paths.

Each case is timed with :mod:`timeit` (best of several repeats) and the
log-log slope of time against problem size gives the scaling exponent.
Timings are machine dependent, so they land in the report's ``timings``
block and never in the deterministic body.
"""

from __future__ import annotations

import timeit

import numpy as np

from fracflow import field_ops
from fracflow.fields import GridSpec, ScalarField
from fracflow.line_ops import exp_convolution
from fracflow.report import RunReport

DEFAULT_SIZES = (256, 512, 1024)
LINE_BATCH = 256
BETA = 0.5


def _best_time(fn, repeat: int = 5) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def _line_case(n: int):
    rng = np.random.default_rng(n)
    values = rng.standard_normal((LINE_BATCH, n))
    dx = 1.0 / n
    return (lambda: exp_convolution(values, dx, 1.0)), LINE_BATCH * n


def _field_case(n: int, backend: str):
    grid = GridSpec(2, n)
    f = ScalarField(grid, np.random.default_rng(n).standard_normal(grid.shape))
    field_ops.mollify(f, BETA, backend=backend)  # build cached tables outside the timed loop
    return (lambda: field_ops.mollify(f, BETA, backend=backend)), n * n


CASES = {
    "line_recurrence": _line_case,
    "spectral_mollify_2d": lambda n: _field_case(n, "spectral"),
    "direct_mollify_2d": lambda n: _field_case(n, "direct"),
}


def scaling_exponent(sizes, seconds) -> float:
    """Slope of ``log(seconds)`` against ``log(sizes)``."""
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


def cmd_bench(sizes=DEFAULT_SIZES, cases=None, repeat: int = 5) -> RunReport:
    """Time each case at every size.

    ``line_recurrence`` filters a stack of lines of length ``N``; the field
    cases mollify an ``N x N`` periodic grid.  Exponents are reported both
    against ``N`` and against the total sample count.
    """
    sizes = [int(n) for n in sizes]
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError("bench sizes must be strictly ascending")
    if len(sizes) < 2:
        raise ValueError("need at least two sizes to fit an exponent")
    report = RunReport("bench", config={"sizes": sizes, "beta": BETA, "line_batch": LINE_BATCH})
    for name in cases or CASES:
        seconds, samples = [], []
        for n in sizes:
            fn, count = CASES[name](n)
            seconds.append(_best_time(fn, repeat))
            samples.append(count)
        report.timings[name] = {
            "sizes": sizes,
            "seconds": seconds,
            "ns_per_sample": [1e9 * s / c for s, c in zip(seconds, samples)],
            "exponent_in_n": scaling_exponent(sizes, seconds),
            "exponent_in_samples": scaling_exponent(samples, seconds),
        }
    return report


def format_bench(report: RunReport) -> str:
    lines = [f"{'case':<22}{'N':>7}{'seconds':>13}{'ns/sample':>12}"]
    for name, row in report.timings.items():
        for n, s, ns in zip(row["sizes"], row["seconds"], row["ns_per_sample"]):
            lines.append(f"{name:<22}{n:>7}{s:>13.4e}{ns:>12.2f}")
        lines.append(
            f"{'':<22}exponent: {row['exponent_in_n']:.2f} in N, "
            f"{row['exponent_in_samples']:.2f} in samples"
        )
    return "\n".join(lines)


__all__ = ["DEFAULT_SIZES", "CASES", "cmd_bench", "format_bench", "scaling_exponent"]
