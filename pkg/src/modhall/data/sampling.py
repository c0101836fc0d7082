"""Uniform temporal frame sampling."""

import numpy as np

from ..errors import DataError


def frame_indices(length, t):
    """Indices of t uniformly spaced frames from a length-L sequence.

    For t >= 2: round(i * (L-1) / (t-1)), rounding halves up, so short
    sequences repeat frames (L=3, t=5 -> [0, 1, 1, 2, 2]). t=1 picks the
    middle frame. Indices are always non-decreasing.
    """
    if length < 1:
        raise DataError("cannot sample frames from an empty sequence")
    if t < 1:
        raise DataError("frame count must be >= 1")
    if t == 1:
        return np.array([(length - 1) // 2], dtype=np.int64)
    pos = np.arange(t, dtype=np.float64) * (length - 1) / (t - 1)
    return np.floor(pos + 0.5).astype(np.int64)


def sample_frames(video, t):
    """Select t frames from video (leading axis = time), order preserved."""
    v = np.asarray(video)
    if v.shape[0] < 1:
        raise DataError("cannot sample frames from an empty sequence")
    return v[frame_indices(v.shape[0], t)]
