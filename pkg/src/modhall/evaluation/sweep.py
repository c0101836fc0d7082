"""Noise sweeps over the privileged modality and switch-point detection.

The sweep degrades modality B with increasing speckle variance and tracks
three curves: the two-stream (A + real B) accuracy, the hallucinated
fused accuracy (A + hallucination, which never sees B and so stays flat), and
the Step-2 discriminator's mean fake-class probability on teacher
features of the corrupted input. The last curve is the deployment signal:
once the discriminator stops believing the real modality, switch to the
hallucinated branch.
"""

from dataclasses import dataclass

import numpy as np

from ..data.io import frame_onehot
from ..errors import ConfigError
from ..rng import substream
from ..training.common import accuracy, predict_logits
from ..training.fusion import fuse_logits
from .evaluate import discriminator_fake_probability


@dataclass
class SweepRow:
    variance: float
    two_stream_acc: float
    hall_fused_acc: float
    p_fake: float

    def to_dict(self):
        return {
            "variance": self.variance,
            "two_stream_acc": self.two_stream_acc,
            "hall_fused_acc": self.hall_fused_acc,
            "p_fake": self.p_fake,
        }


@dataclass
class SweepResult:
    rows: list                 # ascending variance, starting at 0
    void_row: SweepRow = None  # blank-modality arm (variance tagged inf)
    switch_point: float = None

    def to_dict(self):
        return {
            "rows": [r.to_dict() for r in self.rows],
            "void_row": None if self.void_row is None else self.void_row.to_dict(),
            "switch_point": self.switch_point,
        }


DEFAULT_VARIANCES = (0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


def noise_sweep(a_encoder, b_encoder, hall, disc, test_ds,
                variances=DEFAULT_VARIANCES, seed=0, include_void=True,
                threshold=0.5, margin=0.1):
    """Evaluate the degradation curve; returns a SweepResult.

    variances must be sorted ascending and start at 0 (the clean row).
    """
    variances = list(variances)
    if not variances or variances[0] != 0.0:
        raise ConfigError("sweep variances must start at 0")
    if any(b >= a for a, b in zip(variances[1:], variances)):
        raise ConfigError("sweep variances must be strictly increasing")

    labels = test_ds.labels
    a_logits = predict_logits(a_encoder, test_ds.a)
    hall_logits = predict_logits(hall, test_ds.a)
    hall_fused_acc = accuracy(fuse_logits(a_logits, hall_logits), labels)

    rows = []
    for i, var in enumerate(variances):
        if var == 0.0:
            b_jet = test_ds.b_encoded()
        else:
            point_seed = int(substream(seed, "sweep", i).integers(2**31))
            b_jet = test_ds.b_encoded_noisy(var, point_seed)
        two_acc = accuracy(
            fuse_logits(a_logits, predict_logits(b_encoder, b_jet)), labels
        )
        p_fake = discriminator_fake_probability(disc, b_encoder, b_jet)
        rows.append(SweepRow(var, two_acc, hall_fused_acc, p_fake))

    void_row = None
    if include_void:
        b_blank = np.zeros_like(test_ds.b_encoded())
        two_acc = accuracy(
            fuse_logits(a_logits, predict_logits(b_encoder, b_blank)), labels
        )
        p_fake = discriminator_fake_probability(disc, b_encoder, b_blank)
        void_row = SweepRow(float("inf"), two_acc, hall_fused_acc, p_fake)

    result = SweepResult(rows=rows, void_row=void_row)
    result.switch_point = detect_switch_point(result, threshold, margin)
    return result


def detect_switch_point(sweep, threshold=0.5, margin=0.1):
    """Smallest variance whose fake-class probability exceeds threshold+margin."""
    rows = sweep.rows if isinstance(sweep, SweepResult) else list(sweep)
    for row in rows:
        if row.p_fake > threshold + margin:
            return row.variance
    return None
