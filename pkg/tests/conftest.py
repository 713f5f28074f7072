import numpy as np
import pytest

from oirskit import GaussianBeam, MirrorArray

# Bench-experiment shaped mirror fixture: 4x4 grid of 40 mm square elements
# illuminated head-on, receiver plane 25 cm away. The paper never states the
# beam waist; 5 cm keeps most of the beam on the array.
EXPERIMENT_SIDE = 0.04
EXPERIMENT_WAIST = 0.05
EXPERIMENT_TARGET = np.array([0.0, 0.0, 0.25])


@pytest.fixture
def experiment_array() -> MirrorArray:
    return MirrorArray.planar(4, 4, EXPERIMENT_SIDE)


@pytest.fixture
def experiment_beam() -> GaussianBeam:
    return GaussianBeam(1.0, EXPERIMENT_WAIST)
