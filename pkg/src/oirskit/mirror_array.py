"""Micro-mirror-array reflector model.

Array construction, per-element aiming (rotation matrices and deflection
angles), incident-power integrals, the receiver-plane power-density
superposition and two power-efficiency estimates: the concentric-ring
closed form and a per-element quadrature reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .beam import GaussianBeam, rect_power
from .errors import (
    DegenerateGeometryError,
    EmptyAimError,
    LayoutMismatchError,
    ParallelNormalsError,
)
from .grid import PowerDensityMap, centered_coords

DEFAULT_MAP_RESOLUTION = 256


@dataclass(frozen=True)
class MirrorElement:
    """One square mirror element: center (m), side (m), rest normal."""

    center: np.ndarray
    side: float
    initial_normal: np.ndarray
    row: int
    col: int

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("element side must be positive")
        object.__setattr__(self, "center", geometry.as_vec3(self.center))
        object.__setattr__(self, "initial_normal", geometry.normalize(self.initial_normal))


class MirrorArray:
    """Grid of independently tiltable square mirror elements."""

    def __init__(self, elements: list[list[MirrorElement]], gap: float = 0.0):
        if not elements or not elements[0]:
            raise ValueError("array needs at least one element")
        cols = len(elements[0])
        if any(len(row) != cols for row in elements):
            raise ValueError("element grid must be rectangular")
        if gap < 0:
            raise ValueError("gap must be non-negative")
        self.elements = elements
        self.gap = gap

    @classmethod
    def planar(cls, rows: int, cols: int, side: float, gap: float = 0.0,
               center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)) -> "MirrorArray":
        """Regular rows x cols grid in the z = center_z plane."""
        if rows < 1 or cols < 1:
            raise ValueError("rows and cols must be >= 1")
        c = geometry.as_vec3(center)
        pitch = side + gap
        grid = []
        for i in range(rows):
            line = []
            for j in range(cols):
                x = c[0] + (j - (cols - 1) / 2.0) * pitch
                y = c[1] + (i - (rows - 1) / 2.0) * pitch
                line.append(MirrorElement(np.array([x, y, c[2]]), side, normal, i, j))
            grid.append(line)
        return cls(grid, gap)

    @property
    def rows(self) -> int:
        return len(self.elements)

    @property
    def cols(self) -> int:
        return len(self.elements[0])

    @property
    def side(self) -> float:
        return self.elements[0][0].side

    @property
    def pitch(self) -> float:
        return self.side + self.gap

    @property
    def center(self) -> np.ndarray:
        acc = np.zeros(3)
        for row in self.elements:
            for el in row:
                acc += el.center
        return acc / (self.rows * self.cols)

    def __iter__(self):
        for row in self.elements:
            yield from row


@dataclass(frozen=True)
class AimSolution:
    """Per-element control state produced by aim_array.

    rotations[i, j] maps the rest normal onto the aimed normal; thetas holds
    the folded deflection angle arccos|h.h'| used by the cosine power-loss
    model; normals holds the aimed unit normals.
    """

    rotations: np.ndarray      # (rows, cols, 3, 3)
    thetas: np.ndarray         # (rows, cols), radians in [0, pi/2]
    normals: np.ndarray        # (rows, cols, 3)
    target_ids: np.ndarray     # (rows, cols) int

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        if thetas.size == 0:
            raise EmptyAimError("aim solution covers no elements")
        if np.any(thetas < -1e-12) or np.any(thetas > math.pi / 2 + 1e-12):
            raise ValueError("deflection angles must lie in [0, pi/2]")

    @property
    def rows(self) -> int:
        return self.thetas.shape[0]

    @property
    def cols(self) -> int:
        return self.thetas.shape[1]


def aim_element(element: MirrorElement, beam: GaussianBeam, target):
    """Aim one element: returns (rotation, theta, aimed normal)."""
    try:
        new_normal = geometry.deflected_normal(element.center, beam.direction, target)
    except DegenerateGeometryError as exc:
        raise DegenerateGeometryError(
            f"element ({element.row},{element.col}): {exc}"
        ) from exc
    theta = geometry.deflection_angle(element.initial_normal, new_normal)
    rotation = geometry.rotation_between(element.initial_normal, new_normal)
    return rotation, theta, new_normal


def aim_array(array: MirrorArray, beam: GaussianBeam, target, target_id: int = 0) -> AimSolution:
    """Aim every element of the array at one target point."""
    rows, cols = array.rows, array.cols
    rotations = np.empty((rows, cols, 3, 3))
    thetas = np.empty((rows, cols))
    normals = np.empty((rows, cols, 3))
    for el in array:
        rotation, theta, normal = aim_element(el, beam, target)
        rotations[el.row, el.col] = rotation
        thetas[el.row, el.col] = theta
        normals[el.row, el.col] = normal
    ids = np.full((rows, cols), int(target_id))
    return AimSolution(rotations, thetas, normals, ids)


def element_incident_power(beam: GaussianBeam, element: MirrorElement,
                           rel_tol: float = 1e-8) -> float:
    """Beam power landing on the element's square footprint (W)."""
    half = element.side / 2.0
    return rect_power(beam, element.center[:2], half, half, rel_tol)


def reflected_power(incident: float, theta: float) -> float:
    """Cosine deflection loss: P * cos(theta) for theta in [0, pi/2]."""
    if theta < -1e-12 or theta > math.pi / 2 + 1e-12:
        raise ValueError("theta must lie in [0, pi/2]")
    if incident < 0:
        raise ValueError("incident power must be non-negative")
    return incident * math.cos(theta)


def receiver_power_density(array: MirrorArray, beam: GaussianBeam, aim: AimSolution,
                           window: float | None = None,
                           resolution: int = DEFAULT_MAP_RESOLUTION,
                           spot_side: float | None = None,
                           mask: np.ndarray | None = None) -> PowerDensityMap:
    """Receiver-plane power density with every element aimed at one target.

    Each element contributes its slice of the Gaussian profile, re-centered
    on the target and attenuated by cos(theta); contributions superpose in
    the target's local frame and the sum is clipped to the output spot
    region, a square of one element side (spot_side overrides).

    window is the full map width in meters (defaults to the spot side).
    mask restricts the superposition to a subset of elements, e.g. one
    beam-splitting group.
    """
    if aim.rows != array.rows or aim.cols != array.cols:
        raise ValueError("aim solution shape does not match the array")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (array.rows, array.cols):
            raise ValueError("element mask shape does not match the array")
    spot = spot_side if spot_side is not None else array.side
    width = window if window is not None else spot
    if width <= 0 or spot <= 0:
        raise ValueError("window and spot side must be positive")
    if resolution < 2 or resolution % 2:
        raise ValueError("resolution must be an even integer >= 2")

    dx = width / resolution
    coords = centered_coords(resolution, dx)
    xx, yy = np.meshgrid(coords, coords)
    acc = np.zeros_like(xx)
    for el in array:
        if mask is not None and not mask[el.row, el.col]:
            continue
        cos_t = math.cos(aim.thetas[el.row, el.col])
        acc += beam.power_density(xx + el.center[0], yy + el.center[1]) * cos_t
    inside = (np.abs(xx) <= spot / 2.0) & (np.abs(yy) <= spot / 2.0)
    return PowerDensityMap(np.where(inside, acc, 0.0), dx, dx)


@dataclass(frozen=True)
class RingLayout:
    """Concentric-region assignment for the ring efficiency estimate.

    regions[i, j] is the 1-based ring index of element (i, j); radius is the
    ring width (the radius of region 1) used in the closed form.
    """

    regions: np.ndarray
    radius: float

    def __post_init__(self):
        regions = np.asarray(self.regions, dtype=int)
        if self.radius <= 0:
            raise ValueError("ring radius must be positive")
        if np.any(regions < 1):
            raise LayoutMismatchError("every element needs a ring index >= 1")
        object.__setattr__(self, "regions", regions)

    @property
    def num_rings(self) -> int:
        return int(self.regions.max())

    @classmethod
    def concentric(cls, array: MirrorArray, radius: float | None = None) -> "RingLayout":
        """Square annuli about the array center, one pitch wide.

        Ring k collects elements whose center's Chebyshev distance from the
        array center lies in [(k-1), k) pitches: on an even grid a 2x2 block
        forms ring 1 and the surrounding 8k-4 elements ring k; on an odd
        grid the single central element forms ring 1. The default radius
        makes a disk of ring-1 radius match the area of the central 2x2
        block (radius = 2*pitch/sqrt(pi)), keeping the closed form's
        circular regions area-consistent with the square grid.
        """
        pitch = array.pitch
        c = array.center
        regions = np.zeros((array.rows, array.cols), dtype=int)
        for el in array:
            cheb = max(abs(el.center[0] - c[0]), abs(el.center[1] - c[1]))
            regions[el.row, el.col] = int(math.floor(cheb / pitch + 1e-9)) + 1
        if radius is None:
            radius = 2.0 * pitch / math.sqrt(math.pi)
        return cls(regions, radius)


def efficiency_ring_estimate(layout: RingLayout, beam: GaussianBeam, aim: AimSolution) -> float:
    """Ring closed-form power efficiency.

    Each element in ring k is credited 1/(4k^2) of the annulus power between
    radii (k-1)*w and k*w (w = layout.radius), times its deflection cosine.
    The 4k^2 divisor counts a full 2k x 2k block, so partially filled outer
    rings are undercredited; efficiency_numeric is the trusted reference and
    ring_comparison_report surfaces the discrepancy.
    """
    if layout.regions.shape != aim.thetas.shape:
        raise LayoutMismatchError(
            f"layout shape {layout.regions.shape} != aim shape {aim.thetas.shape}"
        )
    w2 = layout.radius**2 / beam.waist**2
    total = 0.0
    for k in range(1, layout.num_rings + 1):
        mask = layout.regions == k
        if not np.any(mask):
            continue
        shell = math.exp(-2.0 * (k - 1) ** 2 * w2) - math.exp(-2.0 * k**2 * w2)
        per_element = shell / (4.0 * k**2)
        total += per_element * float(np.sum(np.cos(aim.thetas[mask])))
    return total


def efficiency_numeric(array: MirrorArray, beam: GaussianBeam, aim: AimSolution) -> float:
    """Quadrature power efficiency: sum of P_ij cos(theta_ij) over P0."""
    if aim.rows != array.rows or aim.cols != array.cols:
        raise ValueError("aim solution shape does not match the array")
    reflected = 0.0
    for el in array:
        p = element_incident_power(beam, el)
        reflected += reflected_power(p, float(aim.thetas[el.row, el.col]))
    return reflected / beam.total_power


@dataclass(frozen=True)
class EfficiencyComparison:
    ring: float
    numeric: float

    @property
    def relative_discrepancy(self) -> float:
        return abs(self.ring - self.numeric) / self.numeric

    def report(self) -> str:
        return (
            f"ring estimate      : {self.ring:.6f}\n"
            f"numeric reference  : {self.numeric:.6f}\n"
            f"relative discrepancy: {self.relative_discrepancy:.4%}\n"
            "(ring formula divides annulus k power over a full 4k^2-element"
            " block; partially filled rings are undercredited)"
        )


def compare_efficiencies(array: MirrorArray, beam: GaussianBeam, aim: AimSolution,
                         layout: RingLayout | None = None) -> EfficiencyComparison:
    layout = layout if layout is not None else RingLayout.concentric(array)
    return EfficiencyComparison(
        ring=efficiency_ring_estimate(layout, beam, aim),
        numeric=efficiency_numeric(array, beam, aim),
    )
