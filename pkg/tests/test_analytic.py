import numpy as np
import pytest

from fracflow.analytic import AnalyticField, sample_vector
from fracflow.errors import ConfigError
from fracflow.fields import GridSpec


def test_evaluate_on_grid():
    g = GridSpec(2, 16)
    X, Y = g.mesh()
    got = AnalyticField("cos(2*x) + 0.5*sin(y)**2 - exp(-t)").evaluate(g, t=1.0)
    assert np.allclose(got, np.cos(2 * X) + 0.5 * np.sin(Y) ** 2 - np.exp(-1.0), rtol=0, atol=1e-15)


def test_constants_broadcast():
    g = GridSpec(3, 8)
    assert AnalyticField("pi").evaluate(g).shape == (8, 8, 8)
    assert np.all(AnalyticField("2*e").evaluate(g) == 2 * np.e)


def test_missing_coordinates_are_zero():
    g = GridSpec(1, 8)
    assert np.all(AnalyticField("cos(y) + z").evaluate(g) == 1.0)


def test_time_dependence():
    assert AnalyticField("sin(t)*x").time_dependent
    assert not AnalyticField("sin(x)").time_dependent


@pytest.mark.parametrize(
    "expr",
    ["__import__('os')", "x.real", "[x]", "open('f')", "lambda: 1", "sin(x, out=x)", "foo", "x if y else 1", "'a'",
     "1 +"],
)
def test_rejected(expr):
    with pytest.raises(ConfigError):
        AnalyticField(expr)


def test_sample_vector():
    g = GridSpec(2, 8)
    v = sample_vector(["1", AnalyticField("x")], g)
    assert v.values.shape == (2, 8, 8)
    with pytest.raises(ConfigError):
        sample_vector(["1"], g)
