"""Shared numeric helpers for the test suite."""

import math

import numpy as np


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_unit(rng):
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def angle_between_vectors(a, b) -> float:
    """Angle in radians via atan2(|a x b|, a . b); precise near 0 and pi."""
    a = unit(a)
    b = unit(b)
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))
