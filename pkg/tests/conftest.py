import numpy as np
import pytest

from spinboson import CutoffLadder, DiscretizedField, ModelConfig


@pytest.fixture
def cfg():
    return ModelConfig(e1=1.0, lambda_uv=1.0, mu=0.25, g=0.05, theta=0.2j)


@pytest.fixture
def ladder():
    return CutoffLadder(0.25, 0.5, e1=1.0)


@pytest.fixture
def small_field(ladder):
    """Coarse grid: fast enough for exhaustive unit checks."""
    return DiscretizedField(
        ladder, n_scales=3, points_per_shell=2, r_max=4.0, n_max=2,
        uv_points_per_panel=2,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
