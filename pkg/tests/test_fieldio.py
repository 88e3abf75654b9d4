import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow.errors import FieldIOError
from fracflow.fieldio import MAGIC, read_field, write_field
from fracflow.fields import Boundary, GridSpec, ScalarField


def test_zero_field_csv_rows(tmp_path):
    path = write_field(ScalarField.zeros(GridSpec(1, 8)), tmp_path / "z.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "# fracflow-field v1, ndim=1, dims=8, length=6.2831853071795862"
    rows = np.loadtxt(path, delimiter=",", comments="#")
    assert rows.shape == (8, 2)
    assert np.all(rows[:, 1] == 0.0)


def test_csv_sine_nodes(tmp_path):
    # grids need 8 nodes, so the quarter-period nodes are every other row
    g = GridSpec(1, 8)
    path = write_field(ScalarField(g, np.sin(g.coords()[0])), tmp_path / "s.csv")
    rows = np.loadtxt(path, delimiter=",", comments="#")[::2]
    assert np.allclose(rows[:, 0], [0, math.pi / 2, math.pi, 3 * math.pi / 2], rtol=0, atol=1e-15)
    assert np.allclose(rows[:, 1], [0, 1, 0, -1], rtol=0, atol=1e-15)


def test_csv_row_major_2d(tmp_path):
    g = GridSpec(2, (8, 16), (1.0, 2.0))
    X, Y = g.mesh()
    path = write_field(ScalarField(g, X + 10 * Y), tmp_path / "f.csv")
    rows = np.loadtxt(path, delimiter=",", comments="#")
    assert rows.shape == (128, 3)
    # the last axis varies fastest
    assert rows[1, 1] == pytest.approx(2.0 / 16) and rows[1, 0] == 0.0
    assert np.allclose(rows[:, 2], rows[:, 0] + 10 * rows[:, 1])


@pytest.mark.parametrize("ndim", [1, 2, 3])
def test_binary_round_trip_is_bit_identical(tmp_path, ndim):
    g = GridSpec(ndim, 8, 3.5)
    values = np.random.default_rng(ndim).standard_normal(g.shape) * 1e5
    path = write_field(ScalarField(g, values), tmp_path / "f.bin", "bin")
    assert path.read_bytes()[:4] == MAGIC
    back = read_field(path)
    assert back.grid == g
    assert np.array_equal(back.values, values)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e300, 1e300), min_size=8, max_size=8))
def test_csv_round_trip(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("csv") / "f.csv"
    g = GridSpec(1, 8)
    values = np.asarray(data)
    write_field(ScalarField(g, values), path)
    back = read_field(path)
    assert back.grid == g
    assert np.all(np.abs(back.values - values) <= 1e-15 * np.maximum(np.abs(values), 1.0))


def test_boundary_is_taken_from_caller(tmp_path):
    g = GridSpec(1, 8)
    path = write_field(ScalarField.zeros(g), tmp_path / "f.csv")
    assert read_field(path, "truncated").grid.boundary is Boundary.TRUNCATED


@pytest.mark.parametrize(
    "content",
    [b"", b"hello\n1,2\n", b"# fracflow-field v1, ndim=1, dims=8, length=1\n0,1\n", b"FFLD\x02\x00\x00\x00\x01",
     b"FFLD\x01\x00\x00\x00\x01" + (8).to_bytes(8, "little") + b"\x00" * 8 + b"\x00" * 16],
    ids=["empty", "no-header", "short-csv", "bad-version", "short-payload"],
)
def test_malformed_files(tmp_path, content):
    path = tmp_path / "bad"
    path.write_bytes(content)
    with pytest.raises(FieldIOError):
        read_field(path)


def test_missing_and_unwritable(tmp_path):
    with pytest.raises(FieldIOError):
        read_field(tmp_path / "nope.csv")
    with pytest.raises(FieldIOError):
        write_field(ScalarField.zeros(GridSpec(1, 8)), tmp_path / "no" / "dir" / "f.csv")


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_field(ScalarField.zeros(GridSpec(1, 8)), tmp_path / "f.txt", "txt")
