"""Stream encoder: residual trunk + temporal convolutions + bottleneck + head.

The trunk is a small residual network (stem conv, three stages of two
residual units, each stage halving resolution). In video mode (t > 1) a
time-axis convolution sits inside the second unit of every stage,
initialized as the identity over time, so a freshly built video encoder
computes exactly the per-frame image model. The bottleneck reduces the
final map to a d-vector per frame; the classifier head averages per-frame
logits over time.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .. import nn
from ..errors import ConfigError, ShapeError

BOTTLENECK_VARIANTS = (
    "none", "one-conv", "spatial-conv+1d-conv", "pool+conv", "fc-after-pool",
)


@dataclass(frozen=True)
class EncoderConfig:
    num_classes: int
    frames: int = 5
    image_size: int = 32
    widths: tuple = (32, 64, 128)
    bottleneck: str = "pool+conv"
    d: int = 128
    in_channels: int = 3

    def validate(self):
        errs = []
        if self.num_classes < 2:
            errs.append("num_classes must be >= 2")
        if self.frames < 1:
            errs.append("frames must be >= 1")
        if self.image_size % 8 != 0 or self.image_size < 16:
            errs.append("image_size must be a multiple of 8, >= 16")
        if len(self.widths) != 3 or any(w < 1 for w in self.widths):
            errs.append("widths must be three positive integers")
        if self.bottleneck not in BOTTLENECK_VARIANTS:
            errs.append(
                f"unknown bottleneck variant '{self.bottleneck}' "
                f"(choose from {', '.join(BOTTLENECK_VARIANTS)})"
            )
        if self.d < 1:
            errs.append("bottleneck dimension must be positive")
        if errs:
            raise ConfigError(errs)

    def to_dict(self):
        d = asdict(self)
        d["widths"] = list(d["widths"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        return cls(**d)


@dataclass
class StreamOutput:
    features: np.ndarray  # [B, T, d] per-frame bottleneck features
    logits: np.ndarray    # [B, C], mean of per-frame head outputs


def build_bottleneck(variant, w3, hw, d, rng, dtype=np.float32):
    """Map the final [hw, hw, w3] feature map to a per-frame vector.

    Returns (block, output_dim). Every variant except "none" emits d dims.
    """
    if variant == "none":
        return nn.Sequential([nn.GlobalAvgPool()]), w3
    if variant == "one-conv":
        # one conv spanning the full spatial extent, no padding
        return nn.Sequential([
            nn.Conv2d(w3, d, hw, rng=rng, dtype=dtype), nn.Flatten(),
        ]), d
    if variant == "spatial-conv+1d-conv":
        return nn.Sequential([
            nn.Conv2d(w3, w3, hw, rng=rng, dtype=dtype), nn.ReLU(),
            nn.Conv2d(w3, d, 1, rng=rng, dtype=dtype), nn.Flatten(),
        ]), d
    if variant == "pool+conv":
        if hw % 2:
            raise ConfigError(f"pool+conv needs an even map size, got {hw}")
        return nn.Sequential([
            nn.AvgPool2d(2),
            nn.Conv2d(w3, d, hw // 2, rng=rng, dtype=dtype), nn.Flatten(),
        ]), d
    if variant == "fc-after-pool":
        return nn.Sequential([
            nn.GlobalAvgPool(), nn.Linear(w3, d, rng=rng, dtype=dtype),
        ]), d
    raise ConfigError(
        f"unknown bottleneck variant '{variant}' "
        f"(choose from {', '.join(BOTTLENECK_VARIANTS)})"
    )


def _stage(w_in, w, t, rng, dtype):
    unit1 = nn.ResidualUnit(
        nn.Sequential([
            nn.Conv2d(w_in, w, 3, stride=2, pad=1, rng=rng, dtype=dtype),
            nn.ReLU(),
            nn.Conv2d(w, w, 3, pad=1, rng=rng, dtype=dtype),
        ]),
        shortcut=nn.Conv2d(w_in, w, 1, stride=2, rng=rng, dtype=dtype),
    )
    branch = [nn.Conv2d(w, w, 3, pad=1, rng=rng, dtype=dtype), nn.ReLU()]
    if t > 1:
        branch.append(nn.TemporalConv(w, t, dtype=dtype))
    branch.append(nn.Conv2d(w, w, 3, pad=1, rng=rng, dtype=dtype))
    unit2 = nn.ResidualUnit(nn.Sequential(branch))
    return [unit1, unit2]


def build_trunk(cfg, rng, dtype=np.float32):
    """Stem + three residual stages; [N, s, s, in] -> [N, s/8, s/8, w3]."""
    w1, w2, w3 = cfg.widths
    t = cfg.frames
    layers = [
        nn.Conv2d(cfg.in_channels, w1, 3, pad=1, rng=rng, dtype=dtype),
        nn.ReLU(),
    ]
    layers += _stage(w1, w1, t, rng, dtype)
    layers += _stage(w1, w2, t, rng, dtype)
    layers += _stage(w2, w3, t, rng, dtype)
    return nn.Sequential(layers)


class StreamEncoder:
    def __init__(self, cfg, rng, dtype=np.float32):
        cfg.validate()
        self.cfg = cfg
        w3 = cfg.widths[2]
        self.trunk = build_trunk(cfg, rng, dtype)
        hw = cfg.image_size // 8
        self.bottleneck, self.d_out = build_bottleneck(
            cfg.bottleneck, w3, hw, cfg.d, rng, dtype
        )
        self.head = nn.Linear(self.d_out, cfg.num_classes, rng=rng, dtype=dtype)
        self._children = [
            ("trunk", self.trunk),
            ("bottleneck", self.bottleneck),
            ("head", self.head),
        ]

    named_params = nn.Layer.named_params
    params = nn.Layer.params
    zero_grads = nn.Layer.zero_grads

    def forward(self, clips, train=True):
        """clips: [B, T, H, W, C_in] -> StreamOutput."""
        b, t = clips.shape[0], clips.shape[1]
        if t != self.cfg.frames:
            raise ShapeError(f"expected {self.cfg.frames} frames, got {t}")
        x = clips.reshape(b * t, *clips.shape[2:])
        fmap = self.trunk.forward(x, train=train)
        feat = self.bottleneck.forward(fmap, train=train)
        frame_logits = self.head.forward(feat, train=train)
        self._bt = (b, t)
        return StreamOutput(
            features=feat.reshape(b, t, self.d_out),
            logits=frame_logits.reshape(b, t, -1).mean(axis=1),
        )

    def backward(self, gfeat=None, glogits=None):
        """Backprop from feature and/or clip-logit gradients; returns input grad."""
        b, t = self._bt
        gf = None
        if glogits is not None:
            per_frame = np.broadcast_to(
                glogits[:, None, :] / t, (b, t, glogits.shape[1])
            ).reshape(b * t, -1)
            gf = self.head.backward(np.ascontiguousarray(per_frame))
        if gfeat is not None:
            gfeat = gfeat.reshape(b * t, self.d_out)
            gf = gfeat if gf is None else gf + gfeat
        if gf is None:
            raise ValueError("backward needs gfeat and/or glogits")
        gx = self.trunk.backward(self.bottleneck.backward(gf))
        return gx.reshape(b, t, *gx.shape[1:])


def build_encoder(cfg, rng=None, dtype=np.float32):
    if rng is None:
        rng = np.random.default_rng(0)
    return StreamEncoder(cfg, rng, dtype)


def temporal_layers(encoder):
    """All time-axis convolution layers in trunk order."""
    found = []
    for layer in encoder.trunk.layers:
        if isinstance(layer, nn.ResidualUnit):
            for sub in layer.branch.layers:
                if isinstance(sub, nn.TemporalConv):
                    found.append(sub)
    return found


def init_temporal_identity(encoder):
    """Reset every temporal kernel to the identity over time ([0,1,0])."""
    for tc in temporal_layers(encoder):
        tc.reset_identity()
    return encoder
