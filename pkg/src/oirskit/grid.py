"""Sampled fields on origin-centered rectangular windows.

Both grid types share one sampling convention: n samples (n even) per axis
at cell centers x_i = (i - n/2 + 0.5) * dx, so the window spans
[-n*dx/2, +n*dx/2], the coordinate set is symmetric under negation and no
sample sits exactly on the window center or edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def centered_coords(n: int, spacing: float) -> np.ndarray:
    """Cell-center sample coordinates for an even-count centered axis."""
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"sample count must be positive and even, got {n}")
    if spacing <= 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    return (np.arange(n) - n / 2 + 0.5) * spacing


@dataclass(frozen=True)
class FieldGrid:
    """Complex amplitude samples on a centered uniform grid.

    values[iy, ix] is the sample at (x[ix], y[iy]); spacing is in meters on
    whichever plane (array or focal) the grid lives.
    """

    values: np.ndarray
    dx: float
    dy: float

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("field values must be a 2-D array")
        ny, nx = v.shape
        if nx % 2 or ny % 2 or nx == 0 or ny == 0:
            raise ValueError(f"sample counts must be even, got {v.shape}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid spacing must be positive")
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v.astype(complex, copy=False))

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return centered_coords(self.nx, self.dx)

    @property
    def y(self) -> np.ndarray:
        return centered_coords(self.ny, self.dy)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def half_width(self) -> float:
        return self.nx * self.dx / 2.0

    @property
    def half_height(self) -> float:
        return self.ny * self.dy / 2.0

    def meshgrid(self):
        return np.meshgrid(self.x, self.y)

    def energy(self) -> float:
        """Total energy sum(|v|^2) * cell area."""
        return float(np.sum(np.abs(self.values) ** 2) * self.cell_area)

    def intensity_map(self) -> "PowerDensityMap":
        return PowerDensityMap(np.abs(self.values) ** 2, self.dx, self.dy)

    @classmethod
    def zeros(cls, nx: int, ny: int, dx: float, dy: float | None = None) -> "FieldGrid":
        return cls(np.zeros((ny, nx), dtype=complex), dx, dy if dy is not None else dx)

    @classmethod
    def from_function(cls, nx, ny, dx, fn, dy=None) -> "FieldGrid":
        dy = dy if dy is not None else dx
        xx, yy = np.meshgrid(centered_coords(nx, dx), centered_coords(ny, dy))
        return cls(np.asarray(fn(xx, yy), dtype=complex), dx, dy)


@dataclass(frozen=True)
class PowerDensityMap:
    """Non-negative power density (W/m^2) on a centered uniform grid."""

    values: np.ndarray
    dx: float
    dy: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("map values must be a 2-D array")
        ny, nx = v.shape
        if nx % 2 or ny % 2 or nx == 0 or ny == 0:
            raise ValueError(f"sample counts must be even, got {v.shape}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid spacing must be positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("map values must be finite")
        if np.any(v < 0):
            raise ValueError("power density must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return centered_coords(self.nx, self.dx)

    @property
    def y(self) -> np.ndarray:
        return centered_coords(self.ny, self.dy)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def half_width(self) -> float:
        return self.nx * self.dx / 2.0

    @property
    def half_height(self) -> float:
        return self.ny * self.dy / 2.0

    def total_power(self) -> float:
        return float(np.sum(self.values) * self.cell_area)

    def scaled(self, factor: float) -> "PowerDensityMap":
        return PowerDensityMap(self.values * factor, self.dx, self.dy)

    def argmax_xy(self) -> tuple[float, float]:
        iy, ix = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.x[ix]), float(self.y[iy])

    def to_csv(self, path, header_lines: tuple[str, ...] = ()) -> None:
        write_map_csv(path, self, header_lines)


def write_map_csv(path, density_map: PowerDensityMap, header_lines=()) -> None:
    """CSV export: header x_m,y_m,w_per_m2; rows ordered by y then x."""
    xx, yy = np.meshgrid(density_map.x, density_map.y)
    table = np.column_stack([xx.ravel(), yy.ravel(), density_map.values.ravel()])
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(line.rstrip("\n") + "\n")
        fh.write("x_m,y_m,w_per_m2\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def read_map_csv(path) -> PowerDensityMap:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=_count_header(path))
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    values = data[:, 2].reshape(len(ys), len(xs))
    return PowerDensityMap(values, float(xs[1] - xs[0]), float(ys[1] - ys[0]))


def _count_header(path) -> int:
    count = 0
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("x_m"):
                count += 1
            else:
                break
    return count
