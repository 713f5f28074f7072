"""3-D geometry for mirror control.

Deflected normals, deflection angles, rotation axes and Rodrigues rotation
matrices for steering flat mirror elements, plus the mirror-reflection law
used as an independent check throughout the test suite.

All vectors are plain numpy arrays of shape (3,). Directions are normalized
internally; the unit-vector validation tolerance is 1e-9.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometryError, ParallelNormalsError

UNIT_TOL = 1e-9
PARALLEL_TOL = 1e-12


def vec3(x, y, z) -> np.ndarray:
    return np.array([float(x), float(y), float(z)])


def as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector components must be finite")
    return a


def normalize(v) -> np.ndarray:
    """Return v / |v|. Raises ValueError on (near-)zero input."""
    a = as_vec3(v)
    n = float(np.linalg.norm(a))
    if n < PARALLEL_TOL:
        raise ValueError("cannot normalize a zero vector")
    return a / n


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    a = as_vec3(v)
    return abs(float(np.linalg.norm(a)) - 1.0) <= tol


def reflect(v, normal) -> np.ndarray:
    """Mirror-reflect direction v about a unit normal: v - 2 (v.n) n."""
    a = as_vec3(v)
    n = normalize(normal)
    return a - 2.0 * float(np.dot(a, n)) * n


def deflected_normal(element_center, incident_dir, target) -> np.ndarray:
    """Unit normal that reflects a beam travelling along incident_dir,
    hitting the element at element_center, onto target.

    The normal is the normalized bisector of the unit vector toward the
    target and the reversed unit incident direction:
    (target - center)/(2 l1) - incident/(2 l2).

    Raises DegenerateGeometryError when the bisector vanishes, i.e. the
    target lies on the incident ray beyond the element so no mirror
    orientation can reach it.
    """
    p = as_vec3(element_center)
    r = as_vec3(target)
    to_target = r - p
    l1 = float(np.linalg.norm(to_target))
    if l1 < PARALLEL_TOL:
        raise ValueError("target coincides with the element center")
    s_unit = normalize(incident_dir)
    bisector = to_target / (2.0 * l1) - s_unit / 2.0
    norm = float(np.linalg.norm(bisector))
    if norm < 1e-9:
        raise DegenerateGeometryError(
            "target lies along the incident direction; mirror normal undefined"
        )
    return bisector / norm


def deflection_angle(initial_normal, new_normal) -> float:
    """Tilt angle between two mirror orientations, arccos|h.h'| in [0, pi/2].

    The absolute value folds the normal's sign ambiguity: a mirror plane is
    unchanged by negating its normal. This is the angle that enters the
    cosine power-loss estimate; it is not signed and must not be fed to
    rotation_matrix directly (use angle_between for that).
    """
    h = normalize(initial_normal)
    hp = normalize(new_normal)
    d = abs(float(np.dot(h, hp)))
    return float(np.arccos(min(d, 1.0)))


def angle_between(a, b) -> float:
    """Unfolded rotation angle arccos(a.b) in [0, pi] between unit vectors."""
    ua = normalize(a)
    ub = normalize(b)
    d = float(np.dot(ua, ub))
    return float(np.arccos(max(-1.0, min(1.0, d))))


def rotation_axis(initial_normal, new_normal) -> np.ndarray:
    """Unit rotation axis h x h' / |h x h'|.

    Raises ParallelNormalsError when the normals are (anti)parallel; callers
    that want "no actuation" semantics substitute the identity rotation.
    """
    h = normalize(initial_normal)
    hp = normalize(new_normal)
    cross = np.cross(h, hp)
    n = float(np.linalg.norm(cross))
    if n < PARALLEL_TOL:
        raise ParallelNormalsError("normals are parallel; rotation axis undefined")
    return cross / n


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix: I cos(t) + (1-cos(t)) l l^T + sin(t) [l]x."""
    l = normalize(axis)
    c = float(np.cos(angle))
    s = float(np.sin(angle))
    lx, ly, lz = l
    skew = np.array([
        [0.0, -lz, ly],
        [lz, 0.0, -lx],
        [-ly, lx, 0.0],
    ])
    return c * np.eye(3) + (1.0 - c) * np.outer(l, l) + s * skew


def rotation_between(initial_normal, new_normal) -> np.ndarray:
    """Proper rotation mapping initial_normal onto new_normal.

    Uses the cross-product axis with the unfolded angle arccos(h.h'), so the
    rotation sense is correct even when the normals open beyond 90 degrees.
    Parallel normals yield the identity; antiparallel normals rotate by pi
    about a deterministic perpendicular axis.
    """
    h = normalize(initial_normal)
    hp = normalize(new_normal)
    try:
        axis = rotation_axis(h, hp)
    except ParallelNormalsError:
        if float(np.dot(h, hp)) > 0.0:
            return np.eye(3)
        return rotation_matrix(_any_perpendicular(h), np.pi)
    return rotation_matrix(axis, angle_between(h, hp))


def _any_perpendicular(v: np.ndarray) -> np.ndarray:
    # pick the coordinate axis least aligned with v, then orthogonalize
    trial = np.zeros(3)
    trial[int(np.argmin(np.abs(v)))] = 1.0
    perp = trial - float(np.dot(trial, v)) * v
    return perp / float(np.linalg.norm(perp))


def is_rotation_matrix(r: np.ndarray, tol: float = 1e-10) -> bool:
    """Orthonormal within tol per entry and det(R) = 1 within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    if not np.allclose(r.T @ r, np.eye(3), atol=tol, rtol=0.0):
        return False
    return abs(float(np.linalg.det(r)) - 1.0) <= tol
