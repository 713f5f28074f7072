import numpy as np
import pytest

from oirskit import FieldGrid, PowerDensityMap
from oirskit.grid import centered_coords, read_map_csv


def test_centered_coords_symmetric_no_zero():
    x = centered_coords(8, 0.5)
    assert np.allclose(x, -x[::-1])
    assert 0.0 not in x
    assert x[4] == 0.25


def test_centered_coords_rejects_odd_counts():
    with pytest.raises(ValueError):
        centered_coords(7, 1.0)


def test_field_grid_energy():
    grid = FieldGrid(np.full((4, 4), 2.0 + 0j), 0.5, 0.25)
    assert grid.energy() == pytest.approx(16 * 4.0 * 0.125, rel=1e-15)


def test_field_grid_rejects_odd_shape():
    with pytest.raises(ValueError):
        FieldGrid(np.zeros((3, 4), dtype=complex), 1.0, 1.0)


def test_field_grid_rejects_nonfinite():
    values = np.zeros((4, 4), dtype=complex)
    values[0, 0] = np.inf
    with pytest.raises(ValueError):
        FieldGrid(values, 1.0, 1.0)


def test_intensity_map_is_abs_square():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    grid = FieldGrid(v, 0.1, 0.2)
    density = grid.intensity_map()
    assert np.allclose(density.values, np.abs(v) ** 2)
    assert density.total_power() == pytest.approx(grid.energy(), rel=1e-14)


def test_density_map_rejects_negative():
    with pytest.raises(ValueError):
        PowerDensityMap(np.array([[1.0, -1.0], [0.0, 0.0]]), 1.0, 1.0)


def test_map_argmax_xy():
    values = np.zeros((4, 4))
    values[3, 1] = 5.0
    m = PowerDensityMap(values, 1.0, 1.0)
    assert m.argmax_xy() == (-0.5, 1.5)


def test_map_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    m = PowerDensityMap(rng.random((6, 8)), 0.001, 0.002)
    path = tmp_path / "map.csv"
    m.to_csv(path, header_lines=("# test header",))
    first = path.read_text().splitlines()
    assert first[0] == "# test header"
    assert first[1] == "x_m,y_m,w_per_m2"
    back = read_map_csv(path)
    # %.17g writes float64 exactly, so the round trip is bit-identical
    assert np.array_equal(back.values, m.values)
    assert back.dx == pytest.approx(m.dx, rel=1e-12)


def test_map_csv_row_order_y_then_x(tmp_path):
    m = PowerDensityMap(np.arange(16, dtype=float).reshape(4, 4), 1.0, 1.0)
    path = tmp_path / "map.csv"
    m.to_csv(path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    # y varies slowest, x fastest
    assert np.all(np.diff(rows[:4, 1]) == 0)
    assert np.all(np.diff(rows[:4, 0]) > 0)
    assert rows[4, 1] > rows[0, 1]
