import math

import numpy as np
import pytest

from fracflow.bench import CASES, cmd_bench, format_bench, scaling_exponent
from fracflow.fields import GridSpec
from fracflow.verification import SUITES, Check, band_limited, format_table, gradient_limit_errors, run_suite


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    checks = run_suite(suite)
    assert checks
    failed = [c.name for c in checks if not c.passed]
    assert not failed


def test_limits_envelope_values():
    rows = gradient_limit_errors()
    errors = [err for _, err, _ in rows]
    assert errors == sorted(errors, reverse=True)
    for beta, err, gap in rows:
        assert err <= 1.05 * gap
        assert gap == pytest.approx(1 - math.exp(-(1 - beta) / (4 * beta)))
    assert errors[-1] < 1e-3


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("speed")


def test_all_is_concatenation():
    names = [c.name for c in run_suite("all")]
    assert names == [c.name for s in SUITES for c in run_suite(s)]


def test_table_format():
    table = format_table([Check("a", 1e-3, 1e-2, True), Check("long name", 2.0, 1.0, True, ">")])
    lines = table.splitlines()
    assert len(lines) == 3
    assert lines[1].endswith("PASS") and ">" in lines[2]
    assert "FAIL" in format_table([Check("x", 1.0, 0.1, False)])


def test_band_limited_is_real_and_reproducible():
    g = GridSpec(2, 32)
    a, b = band_limited(g, 7), band_limited(g, 7)
    assert np.array_equal(a.values, b.values)
    spectrum = np.abs(np.fft.fft2(a.values))
    k = np.fft.fftfreq(32, 1 / 32)
    assert np.max(spectrum[np.abs(k) > 8]) < 1e-10


def test_scaling_exponent():
    assert scaling_exponent([10, 20, 40], [1.0, 4.0, 16.0]) == pytest.approx(2.0)


def test_bench_rejects_bad_sizes():
    with pytest.raises(ValueError):
        cmd_bench([512, 256])
    with pytest.raises(ValueError):
        cmd_bench([256])


def test_bench_report_shape():
    report = cmd_bench([64, 128], cases=["line_recurrence"], repeat=1)
    row = report.timings["line_recurrence"]
    assert row["sizes"] == [64, 128]
    assert len(row["seconds"]) == 2 and all(s > 0 for s in row["seconds"])
    assert "line_recurrence" in format_bench(report)
    # wall-clock numbers never enter the deterministic body
    assert "seconds" not in report.to_json()


def test_line_recurrence_scales_linearly():
    row = cmd_bench([256, 512, 1024], cases=["line_recurrence"]).timings["line_recurrence"]
    assert abs(row["exponent_in_samples"] - 1.0) < 0.2


def test_spectral_mollify_scaling():
    row = cmd_bench([256, 512, 1024], cases=["spectral_mollify_2d"]).timings["spectral_mollify_2d"]
    assert 0.8 < row["exponent_in_samples"] < 1.3


def test_direct_mollify_scaling():
    # the separable quadrature costs N^2 points times an O(N) stencil per axis
    row = cmd_bench([128, 256, 512], cases=["direct_mollify_2d"]).timings["direct_mollify_2d"]
    assert 1.2 < row["exponent_in_samples"] < 1.8


def test_cases_registered():
    assert set(CASES) == {"line_recurrence", "spectral_mollify_2d", "direct_mollify_2d"}
