"""Gaussian illumination model and transverse power integrals.

The incident beam has amplitude A(x, y) = (A0/w) exp(-r^2/w^2) on the
reflector plane (w is the waist radius, r the distance from the beam
center), power density kappa * A^2 and total power P0 = pi*kappa*A0^2/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import as_vec3, normalize

QUAD_REL_TOL = 1e-8
_QUAD_MAX_ORDER = 512


@dataclass(frozen=True)
class GaussianBeam:
    """Collimated Gaussian beam illuminating a reflector plane.

    a0: central amplitude; waist: 1/e amplitude radius (m); kappa: power per
    amplitude squared (W per A^2); center: intersection of the beam axis
    with the reflector plane (m); direction: propagation unit vector.
    """

    a0: float
    waist: float
    kappa: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))

    def __post_init__(self):
        if self.a0 <= 0 or self.waist <= 0 or self.kappa <= 0:
            raise ValueError("a0, waist and kappa must all be positive")
        object.__setattr__(self, "center", as_vec3(self.center))
        object.__setattr__(self, "direction", normalize(self.direction))

    @property
    def total_power(self) -> float:
        """P0 = pi * kappa * A0^2 / 2."""
        return math.pi * self.kappa * self.a0**2 / 2.0

    @property
    def peak_density(self) -> float:
        return self.kappa * (self.a0 / self.waist) ** 2

    def amplitude(self, x, y):
        """Amplitude at transverse plane coordinates (vectorized)."""
        r2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        return (self.a0 / self.waist) * np.exp(-r2 / self.waist**2)

    def power_density(self, x, y):
        """Power density kappa*A^2 (W/m^2) at transverse coordinates."""
        r2 = (np.asarray(x) - self.center[0]) ** 2 + (np.asarray(y) - self.center[1]) ** 2
        return self.peak_density * np.exp(-2.0 * r2 / self.waist**2)

    def scaled(self, amplitude_factor: float) -> "GaussianBeam":
        return GaussianBeam(self.a0 * amplitude_factor, self.waist, self.kappa,
                            self.center, self.direction)


# Gaussian support clip: beyond this many waists the density is below
# 1e-60 of the peak, far under any quadrature tolerance in use here.
_SUPPORT_WAISTS = 8.31


def rect_power(beam: GaussianBeam, center_xy, half_x: float, half_y: float,
               rel_tol: float = QUAD_REL_TOL) -> float:
    """Beam power through an axis-aligned rectangle (Gauss-Legendre, order
    doubled until the estimate is stable to rel_tol).

    The domain is clipped to the beam's numerical support so that arbitrarily
    large rectangles still resolve a narrow beam."""
    cx, cy = float(center_xy[0]), float(center_xy[1])
    if half_x <= 0 or half_y <= 0:
        raise ValueError("rectangle half-sizes must be positive")
    reach = _SUPPORT_WAISTS * beam.waist
    x0 = max(cx - half_x, beam.center[0] - reach)
    x1 = min(cx + half_x, beam.center[0] + reach)
    y0 = max(cy - half_y, beam.center[1] - reach)
    y1 = min(cy + half_y, beam.center[1] + reach)
    if x0 >= x1 or y0 >= y1:
        return 0.0

    def estimate(order: int) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x0 + x1) + nodes * 0.5 * (x1 - x0)
        y = 0.5 * (y0 + y1) + nodes * 0.5 * (y1 - y0)
        vals = beam.power_density(x[None, :], y[:, None])
        return float(weights @ vals @ weights * 0.25 * (x1 - x0) * (y1 - y0))

    return _refine(estimate, rel_tol)


def disk_power(beam: GaussianBeam, center_xy, radius: float,
               rel_tol: float = QUAD_REL_TOL) -> float:
    """Beam power through a disk.

    Polar quadrature about the disk center: Gauss-Legendre radially,
    trapezoid in angle (exact for smooth periodic integrands once resolved),
    both refined together. The radial span is clipped to the beam's
    numerical support."""
    cx, cy = float(center_xy[0]), float(center_xy[1])
    if radius <= 0:
        raise ValueError("disk radius must be positive")
    reach = _SUPPORT_WAISTS * beam.waist
    dist = math.hypot(cx - beam.center[0], cy - beam.center[1])
    r0 = max(0.0, dist - reach)
    r1 = min(radius, dist + reach)
    if r0 >= r1:
        return 0.0

    def estimate(order: int) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(order)
        r = 0.5 * (r0 + r1) + nodes * 0.5 * (r1 - r0)
        n_ang = 4 * order
        phi = np.arange(n_ang) * (2.0 * math.pi / n_ang)
        x = cx + r[:, None] * np.cos(phi)[None, :]
        y = cy + r[:, None] * np.sin(phi)[None, :]
        vals = beam.power_density(x, y)
        ang_int = vals.sum(axis=1) * (2.0 * math.pi / n_ang)
        return float(np.sum(weights * ang_int * r) * 0.5 * (r1 - r0))

    return _refine(estimate, rel_tol)


def centered_disk_power(beam: GaussianBeam, radius: float) -> float:
    """Closed form for a disk centered on the beam axis:
    P0 * (1 - exp(-2 R^2 / w^2))."""
    if radius <= 0:
        raise ValueError("disk radius must be positive")
    return beam.total_power * (1.0 - math.exp(-2.0 * radius**2 / beam.waist**2))


def _refine(estimate, rel_tol: float) -> float:
    order = 8
    prev = estimate(order)
    while order < _QUAD_MAX_ORDER:
        order *= 2
        cur = estimate(order)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev
