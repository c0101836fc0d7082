"""Jet color mapping for single-channel depth maps.

Depth networks here consume 3-channel inputs, so raw maps are normalized
to [0,1] and pushed through the classic jet colormap (dark blue -> cyan ->
yellow -> dark red). The channel anchor tables below are the standard
piecewise-linear jet definition; np.interp reproduces the colormap without
pulling in a plotting dependency at data-loading time.
"""

import numpy as np

# (position, value) anchors per channel
_JET_RED = ((0.0, 0.0), (0.35, 0.0), (0.66, 1.0), (0.89, 1.0), (1.0, 0.5))
_JET_GREEN = ((0.0, 0.0), (0.125, 0.0), (0.375, 1.0), (0.64, 1.0), (0.91, 0.0), (1.0, 0.0))
_JET_BLUE = ((0.0, 0.5), (0.11, 1.0), (0.34, 1.0), (0.65, 0.0), (1.0, 0.0))


def _apply(x01):
    out = np.empty(x01.shape + (3,), dtype=np.float32)
    for ch, anchors in enumerate((_JET_RED, _JET_GREEN, _JET_BLUE)):
        xs = np.array([a[0] for a in anchors])
        ys = np.array([a[1] for a in anchors])
        out[..., ch] = np.interp(x01, xs, ys).astype(np.float32)
    return out


def encode_depth_jet(depth_map, lo=None, hi=None):
    """Map a [H, W] depth map to a [H, W, 3] jet image in [0,1].

    Normalization range defaults to the map's own min/max; pass lo/hi to
    normalize against a wider range (e.g. a whole clip). A constant map
    (or lo == hi) maps every pixel to the colormap midpoint.
    """
    d = np.asarray(depth_map, dtype=np.float32)
    if not np.all(np.isfinite(d)):
        raise ValueError("depth map contains non-finite values")
    if lo is None:
        lo = float(d.min())
    if hi is None:
        hi = float(d.max())
    span = hi - lo
    if span <= 1e-12:
        x01 = np.full_like(d, 0.5)
    else:
        x01 = np.clip((d - lo) / span, 0.0, 1.0)
    return _apply(x01)


def encode_depth_clip(clip):
    """Jet-encode a [T, H, W] clip, normalizing over the whole clip's range."""
    c = np.asarray(clip, dtype=np.float32)
    lo, hi = float(c.min()), float(c.max())
    return np.stack([encode_depth_jet(f, lo, hi) for f in c])
