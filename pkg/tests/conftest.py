import numpy as np
import pytest

from restain.profiles import default_profile, rotate_profile


@pytest.fixture(scope="session")
def her2_profile():
    return default_profile()


@pytest.fixture(scope="session")
def brand_pair(her2_profile):
    """Two nearby HER2 domains, the regime real stain brands live in."""
    a = rotate_profile(her2_profile, 0.02, seed=11, domain_id="brand-a")
    b = rotate_profile(her2_profile, 0.02, seed=22, domain_id="brand-b")
    return a, b


def random_tile_pixels(rng, h=16, w=16):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
