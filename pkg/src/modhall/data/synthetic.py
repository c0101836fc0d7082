"""Paired-modality synthetic task generator.

Each class c maps to a (shape, grating) pair via c -> (i, j) = (c // nb,
c % nb) with nb = ceil(sqrt(C)). Modality A natively shows shape i (a
high-contrast procedural mask); modality B is a depth-like single-channel
map natively showing an oriented grating j. The `overlap` fraction leaks
the grating into A at `overlap * amp_a` contrast, so overlap=0 makes the
two class factors strictly disjoint across modalities and overlap=1 makes
A carry everything B knows. A faint shape silhouette is always present in
B (depth sensors see object outlines), scaled by a fixed construction
constant well below B's native contrast.

Geometry (position jitter, per-frame drift, grating phase) is drawn per
sample from a seed-derived stream keyed by split and index, so generation
is deterministic, order-independent, and safe to parallelize.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ..errors import ConfigError
from ..rng import substream
from .jet import encode_depth_clip
from .noise import NoiseSpec, speckle_noise

# construction constants (not part of the public spec surface)
_EDGE = 1.5          # soft-edge width of shape masks, px
_NOISE_STD = 0.06    # additive pixel noise
_BACKLEAK = 0.15     # shape silhouette contrast in B, fraction of amp_b
_PERIOD_FRAC = 0.25  # grating period as fraction of image side


@dataclass(frozen=True)
class SyntheticTaskSpec:
    num_classes: int
    samples_per_class: int = 200
    image_size: int = 32
    frames_per_clip: int = 5
    modality_a_informativeness: float = 0.5
    modality_b_informativeness: float = 0.5
    overlap: float = 0.35
    seed: int = 0

    def validate(self):
        errs = []
        if not (isinstance(self.num_classes, (int, np.integer)) and self.num_classes >= 2):
            errs.append("num_classes must be an integer >= 2")
        if self.samples_per_class < 1:
            errs.append("samples_per_class must be >= 1")
        if self.image_size < 8:
            errs.append("image_size must be >= 8")
        if self.frames_per_clip < 1:
            errs.append("frames_per_clip must be >= 1")
        for name in ("modality_a_informativeness", "modality_b_informativeness", "overlap"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                errs.append(f"{name} must lie in [0, 1]")
        if errs:
            raise ConfigError(errs)


def class_factors(c, num_classes):
    """(shape index, grating index) for class c."""
    nb = math.ceil(math.sqrt(num_classes))
    return c // nb, c % nb, nb


def _shape_field(kind, dx, dy, r):
    """Signed distance-like field: negative inside the shape."""
    ax, ay = np.abs(dx), np.abs(dy)
    if kind == 0:    # disk
        return np.sqrt(dx * dx + dy * dy) - r
    if kind == 1:    # cross of two bars
        bar1 = np.maximum(ax - r, ay - 0.35 * r)
        bar2 = np.maximum(ay - r, ax - 0.35 * r)
        return np.minimum(bar1, bar2)
    if kind == 2:    # square outline
        m = np.maximum(ax, ay)
        return np.maximum(m - r, 0.55 * r - m)
    if kind == 3:    # diamond
        return ax + ay - r
    if kind == 4:    # triangle
        return np.maximum(1.2 * ax + 0.8 * dy - 0.7 * r, -dy - 0.8 * r)
    raise ValueError(f"no shape with index {kind}")


def _render_sample(spec, i, j, nb, rs):
    """One paired clip: (a [T,H,W,3] in [0,1], b [T,H,W] raw depth-like)."""
    s = spec.image_size
    t = spec.frames_per_clip
    amp_a = 0.5 * spec.modality_a_informativeness
    amp_b = 0.5 * spec.modality_b_informativeness
    ys = np.arange(s, dtype=np.float32)[:, None]
    xs = np.arange(s, dtype=np.float32)[None, :]

    cx = s / 2 + rs.uniform(-s / 8, s / 8)
    cy = s / 2 + rs.uniform(-s / 8, s / 8)
    r = s * 0.28 * (1.0 + rs.uniform(-0.15, 0.15))
    drift = rs.uniform(-1.0, 1.0, size=2) if t > 1 else np.zeros(2)
    theta = math.pi * j / nb
    period = s * _PERIOD_FRAC
    phase = rs.uniform(0.0, 2.0 * math.pi)
    dphase = rs.uniform(-0.3, 0.3) if t > 1 else 0.0

    a = np.empty((t, s, s, 3), dtype=np.float32)
    b = np.empty((t, s, s), dtype=np.float32)
    for f in range(t):
        dx = xs - (cx + f * drift[0])
        dy = ys - (cy + f * drift[1])
        mask = np.clip(0.5 - _shape_field(i, dx, dy, r) / _EDGE, 0.0, 1.0)
        carrier = 2.0 * math.pi * (xs * math.cos(theta) + ys * math.sin(theta)) / period
        grat = np.cos(carrier + phase + f * dphase).astype(np.float32)

        plane = 0.5 + amp_a * (mask - 0.5) + spec.overlap * amp_a * 0.5 * grat
        for ch in range(3):
            a[f, :, :, ch] = plane + rs.normal(0.0, _NOISE_STD, size=(s, s))
        b[f] = (
            0.5
            + amp_b * 0.5 * grat
            + _BACKLEAK * amp_b * (mask - 0.5)
            + rs.normal(0.0, _NOISE_STD, size=(s, s))
        )
    np.clip(a, 0.0, 1.0, out=a)
    return a, b


@dataclass
class SyntheticDataset:
    """In-memory split: modality A clips, raw modality-B maps, labels."""

    a: np.ndarray          # [N, T, H, W, 3] float32
    b_raw: np.ndarray      # [N, T, H, W] float32
    labels: np.ndarray     # [N] int64
    num_classes: int
    split: str
    spec: SyntheticTaskSpec = None
    _b_jet: np.ndarray = field(default=None, repr=False, compare=False)

    def __len__(self):
        return self.a.shape[0]

    @property
    def frames(self):
        return self.a.shape[1]

    def b_encoded(self):
        """Jet-encoded clean modality B, [N, T, H, W, 3]; cached."""
        if self._b_jet is None:
            self._b_jet = np.stack([encode_depth_clip(c) for c in self.b_raw])
        return self._b_jet

    def b_encoded_noisy(self, variance, seed):
        """Jet encoding of speckle-corrupted raw maps (never cached)."""
        noisy = speckle_noise(self.b_raw, NoiseSpec(variance=variance, seed=seed))
        return np.stack([encode_depth_clip(c) for c in noisy])


def _generate_split(spec, split, n):
    a = np.empty((n, spec.frames_per_clip, spec.image_size, spec.image_size, 3), np.float32)
    b = np.empty((n, spec.frames_per_clip, spec.image_size, spec.image_size), np.float32)
    labels = np.empty(n, dtype=np.int64)
    for idx in range(n):
        c = idx % spec.num_classes
        i, j, nb = class_factors(c, spec.num_classes)
        rs = substream(spec.seed, "synth", split, idx)
        a[idx], b[idx] = _render_sample(spec, i, j, nb, rs)
        labels[idx] = c
    return SyntheticDataset(a, b, labels, spec.num_classes, split, spec)


def generate_synthetic(spec):
    """Build (train, test) splits; pure function of the spec."""
    spec.validate()
    n_train = spec.samples_per_class * spec.num_classes
    n_test = max(1, spec.samples_per_class // 2) * spec.num_classes
    return (
        _generate_split(spec, "train", n_train),
        _generate_split(spec, "test", n_test),
    )
