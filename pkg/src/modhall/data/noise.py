"""Multiplicative speckle corruption for the depth modality."""

from dataclasses import dataclass

import numpy as np

from ..rng import substream


@dataclass(frozen=True)
class NoiseSpec:
    variance: float  # sigma^2 of the multiplicative factor
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("noise variance must be >= 0")


def speckle_noise(image, spec):
    """Return image * n with n ~ Normal(mean 1, var spec.variance), iid per element.

    variance 0 returns an unmodified copy. Deterministic for a fixed seed.
    """
    x = np.asarray(image, dtype=np.float32)
    if spec.variance == 0:
        return x.copy()
    rng = substream(spec.seed, "speckle")
    n = 1.0 + np.sqrt(spec.variance) * rng.standard_normal(x.shape)
    return (x * n).astype(np.float32)
