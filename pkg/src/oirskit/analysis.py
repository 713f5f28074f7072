"""Receiver-side power integration and pointing-error studies.

Aperture power is integrated by cell-center inclusion over a power-density
map. Pointing error is modeled as an isotropic Gaussian displacement of the
receiver center; the jitter offsets for a Monte-Carlo run are drawn in one
seeded batch, so results do not depend on how the evaluation is chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfWindowError
from .grid import PowerDensityMap


@dataclass(frozen=True)
class Receiver:
    """Circular aperture on the receiver plane: center (m) and radius (m)."""

    center: tuple
    radius: float

    def __post_init__(self):
        center = (float(self.center[0]), float(self.center[1]))
        if self.radius <= 0:
            raise ValueError("receiver radius must be positive")
        object.__setattr__(self, "center", center)

    def moved(self, dx: float, dy: float) -> "Receiver":
        return Receiver((self.center[0] + dx, self.center[1] + dy), self.radius)


def received_power(density_map: PowerDensityMap, receiver: Receiver) -> float:
    """Power through the aperture: sum of density over cells whose centers
    fall inside the disk, times cell area.

    Raises OutOfWindowError when the disk lies wholly outside the map
    window; a partially overlapping disk integrates the covered part.
    """
    cx, cy = receiver.center
    near_x = min(max(cx, -density_map.half_width), density_map.half_width)
    near_y = min(max(cy, -density_map.half_height), density_map.half_height)
    if math.hypot(cx - near_x, cy - near_y) > receiver.radius:
        raise OutOfWindowError(
            f"aperture at ({cx:.6g}, {cy:.6g}) misses the map window"
        )
    return _disk_sum(density_map, cx, cy, receiver.radius)


def _disk_sum(density_map: PowerDensityMap, cx: float, cy: float, radius: float) -> float:
    x = density_map.x
    y = density_map.y
    ix0 = int(np.searchsorted(x, cx - radius))
    ix1 = int(np.searchsorted(x, cx + radius, side="right"))
    iy0 = int(np.searchsorted(y, cy - radius))
    iy1 = int(np.searchsorted(y, cy + radius, side="right"))
    if ix0 >= ix1 or iy0 >= iy1:
        return 0.0
    sub = density_map.values[iy0:iy1, ix0:ix1]
    xx = x[ix0:ix1][None, :] - cx
    yy = y[iy0:iy1][:, None] - cy
    mask = xx**2 + yy**2 <= radius**2
    return float(sub[mask].sum() * density_map.cell_area)


@dataclass(frozen=True)
class OffsetSweep:
    """received_power over a list of receiver displacements.

    Offsets whose displaced aperture misses the map entirely are marked
    invalid and carry NaN power rather than aborting the sweep.
    """

    offsets: np.ndarray   # (n, 2)
    powers: np.ndarray    # (n,), NaN where invalid
    valid: np.ndarray     # (n,) bool

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(line.rstrip("\n") + "\n")
            fh.write("dx_m,dy_m,power_w\n")
            table = np.column_stack([self.offsets, self.powers])
            np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def offset_sweep(density_map: PowerDensityMap, receiver: Receiver, offsets) -> OffsetSweep:
    offsets = np.asarray(offsets, dtype=float).reshape(-1, 2)
    powers = np.empty(len(offsets))
    valid = np.ones(len(offsets), dtype=bool)
    for i, (dx, dy) in enumerate(offsets):
        try:
            powers[i] = received_power(density_map, receiver.moved(dx, dy))
        except OutOfWindowError:
            powers[i] = math.nan
            valid[i] = False
    return OffsetSweep(offsets, powers, valid)


@dataclass(frozen=True)
class FadingSampleSet:
    """Monte-Carlo received powers under Gaussian pointing jitter."""

    powers: np.ndarray
    sigma: float
    seed: int

    def __post_init__(self):
        powers = np.asarray(self.powers, dtype=float)
        if powers.size < 1:
            raise ValueError("need at least one sample")
        if np.any(powers < 0):
            raise ValueError("received powers must be non-negative")
        if self.sigma < 0:
            raise ValueError("jitter sigma must be non-negative")
        object.__setattr__(self, "powers", powers)

    @property
    def count(self) -> int:
        return int(self.powers.size)

    @property
    def mean(self) -> float:
        return float(self.powers.mean())

    @property
    def variance(self) -> float:
        return float(self.powers.var())

    def percentile(self, q: float) -> float:
        return float(np.percentile(self.powers, q))

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(line.rstrip("\n") + "\n")
            fh.write("sample_idx,power_w\n")
            for i, p in enumerate(self.powers):
                fh.write(f"{i},{p:.17g}\n")

    def summary(self) -> str:
        return (
            f"samples: {self.count}\n"
            f"jitter sigma: {self.sigma:.9g} m\n"
            f"mean power: {self.mean:.9g} W\n"
            f"power variance: {self.variance:.9g} W^2\n"
            f"5th percentile power: {self.percentile(5.0):.9g} W"
        )


def fading_samples(density_map: PowerDensityMap, receiver: Receiver, sigma: float,
                   count: int, seed: int = 0) -> FadingSampleSet:
    """Received power at centers displaced by i.i.d. zero-mean isotropic
    Gaussian offsets. A displaced aperture that misses the map collects
    zero power (the beam escaped, not an error). Deterministic per seed."""
    if sigma < 0:
        raise ValueError("jitter sigma must be non-negative")
    if count < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    offsets = rng.normal(0.0, sigma, size=(count, 2)) if sigma > 0 else np.zeros((count, 2))
    powers = np.empty(count)
    for i, (dx, dy) in enumerate(offsets):
        powers[i] = _disk_sum(density_map, receiver.center[0] + dx,
                              receiver.center[1] + dy, receiver.radius)
    return FadingSampleSet(powers, sigma, seed)
