import numpy as np
import pytest

from modhall.data.synthetic import SyntheticTaskSpec, generate_synthetic
from modhall.models import EncoderConfig


@pytest.fixture(scope="session")
def tiny_spec():
    return SyntheticTaskSpec(
        num_classes=2, samples_per_class=6, image_size=16, frames_per_clip=2,
        seed=0,
    )


@pytest.fixture(scope="session")
def tiny_data(tiny_spec):
    """One micro dataset shared across the suite; treat as read-only."""
    return generate_synthetic(tiny_spec)


@pytest.fixture(scope="session")
def tiny_enc_cfg():
    return EncoderConfig(
        num_classes=2, frames=2, image_size=16, widths=(4, 6, 8), d=8,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
