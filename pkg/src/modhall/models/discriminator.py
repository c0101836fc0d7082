"""Discriminator heads for the extended-label game.

Two families: "shallow" (two hidden fc layers) and "deep-with-skips"
(three equal-width fc layers joined by residual additions, then two
widening layers). Input is a per-frame feature vector, concatenated with
the one-hot frame index in video mode. Output is game_classes+1 logits:
the true classes plus a dedicated fake class.

Hidden widths follow the reference widths (2048/1024/3072) scaled by
width_scale, which tracks the backbone scale-down; width_scale=1 restores
the reference sizes.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .. import nn
from ..errors import ConfigError, ShapeError


@dataclass(frozen=True)
class DiscConfig:
    feat_dim: int
    frames: int = 5
    game_classes: int = 4          # 1 for the naive real/fake game
    variant: str = "shallow"       # shallow | deep-with-skips
    width_scale: float = 0.125
    use_frame_onehot: bool = True  # ablation arm: features without y^t

    def validate(self):
        errs = []
        if self.feat_dim < 1:
            errs.append("feat_dim must be positive")
        if self.frames < 1:
            errs.append("frames must be >= 1")
        if self.game_classes < 1:
            errs.append("game_classes must be >= 1")
        if self.variant not in ("shallow", "deep-with-skips"):
            errs.append(
                f"unknown discriminator variant '{self.variant}' "
                "(choose from shallow, deep-with-skips)"
            )
        if self.width_scale <= 0:
            errs.append("width_scale must be positive")
        if errs:
            raise ConfigError(errs)

    @property
    def in_dim(self):
        extra = self.frames if (self.frames > 1 and self.use_frame_onehot) else 0
        return self.feat_dim + extra

    @property
    def out_dim(self):
        return self.game_classes + 1

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _w(base, scale):
    return max(8, int(round(base * scale)))


class Discriminator:
    def __init__(self, cfg, rng, dtype=np.float32):
        cfg.validate()
        self.cfg = cfg
        s = cfg.width_scale
        if cfg.variant == "shallow":
            h1, h2 = _w(2048, s), _w(1024, s)
            layers = [
                nn.Linear(cfg.in_dim, h1, rng=rng, dtype=dtype), nn.ReLU(),
                nn.Linear(h1, h2, rng=rng, dtype=dtype), nn.ReLU(),
                nn.Linear(h2, cfg.out_dim, rng=rng, dtype=dtype),
            ]
        else:
            h, h4, h5 = _w(1024, s), _w(2048, s), _w(3072, s)
            layers = [
                nn.Linear(cfg.in_dim, h, rng=rng, dtype=dtype), nn.ReLU(),
                nn.ResidualUnit(nn.Sequential([nn.Linear(h, h, rng=rng, dtype=dtype)])),
                nn.ResidualUnit(nn.Sequential([nn.Linear(h, h, rng=rng, dtype=dtype)])),
                nn.Linear(h, h4, rng=rng, dtype=dtype), nn.ReLU(),
                nn.Linear(h4, h5, rng=rng, dtype=dtype), nn.ReLU(),
                nn.Linear(h5, cfg.out_dim, rng=rng, dtype=dtype),
            ]
        self.net = nn.Sequential(layers)
        self._children = [("net", self.net)]

    named_params = nn.Layer.named_params
    params = nn.Layer.params
    zero_grads = nn.Layer.zero_grads

    def forward(self, features, frame_onehot=None, train=True):
        return discriminator_forward(self, features, frame_onehot, train=train)

    def backward(self, glogits):
        """Returns gradient w.r.t. the feature part of the input."""
        gx = self.net.backward(glogits)
        return gx[:, : self.cfg.feat_dim]


def discriminator_forward(disc, features, frame_onehot=None, train=True):
    """Score per-frame features: rows [features ; frame one-hot] -> C+1 logits."""
    cfg = disc.cfg
    if features.ndim != 2 or features.shape[1] != cfg.feat_dim:
        raise ShapeError(
            f"expected features [N, {cfg.feat_dim}], got {features.shape}"
        )
    wants_onehot = cfg.frames > 1 and cfg.use_frame_onehot
    if wants_onehot:
        if frame_onehot is None:
            raise ShapeError(f"frame one-hot required (frames={cfg.frames})")
        if frame_onehot.shape != (features.shape[0], cfg.frames):
            raise ShapeError(
                f"expected frame one-hot [{features.shape[0]}, {cfg.frames}], "
                f"got {frame_onehot.shape}"
            )
        x = np.concatenate(
            [features, frame_onehot.astype(features.dtype)], axis=1
        )
    else:
        x = features
    return disc.net.forward(x, train=train)


def build_discriminator(cfg, rng=None, dtype=np.float32):
    if rng is None:
        rng = np.random.default_rng(0)
    return Discriminator(cfg, rng, dtype)
