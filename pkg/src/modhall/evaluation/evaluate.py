"""Deterministic accuracy measurement over a test split."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..losses import softmax
from ..training.common import accuracy, predict_logits

FUSION_MODES = ("none", "average-logits")


@dataclass
class EvalReport:
    accuracies: dict               # stream name -> accuracy
    per_class: dict                # stream name -> [C] per-class accuracy
    fused_acc: float = None        # None when fusion="none" or single stream
    p_fake: float = None           # mean discriminator fake-class probability
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "accuracies": {k: float(v) for k, v in self.accuracies.items()},
            "per_class": {k: [float(x) for x in v] for k, v in self.per_class.items()},
            "fused_acc": None if self.fused_acc is None else float(self.fused_acc),
            "p_fake": None if self.p_fake is None else float(self.p_fake),
        }
        d.update(self.meta)
        return d


def _per_class(logits, labels, num_classes):
    pred = logits.argmax(axis=1)
    return [
        float((pred[labels == c] == c).mean()) if np.any(labels == c) else 0.0
        for c in range(num_classes)
    ]


def modality_tensor(ds, modality, b_tensor=None):
    if modality == "a":
        return ds.a
    if modality == "b":
        return ds.b_encoded() if b_tensor is None else b_tensor
    raise DataError(f"unknown modality '{modality}'")


def evaluate(streams, test_ds, fusion="average-logits", b_tensor=None,
             batch_size=64, meta=None):
    """Score streams on a test split; optionally fuse their logits.

    streams: list of (name, encoder, modality) with modality "a" or "b".
    b_tensor overrides the clean jet-encoded modality B (noise arms pass a
    corrupted encoding, blank arms pass zeros). Pure function of its
    inputs: repeated calls agree exactly.
    """
    if fusion not in FUSION_MODES:
        raise DataError(f"unknown fusion mode '{fusion}'")
    if not streams:
        raise DataError("no streams to evaluate")
    labels = test_ds.labels
    c = test_ds.num_classes
    accs, per_class, all_logits = {}, {}, []
    for name, encoder, modality in streams:
        if encoder.cfg.num_classes != c:
            raise DataError(
                f"stream '{name}' predicts {encoder.cfg.num_classes} classes, "
                f"split has {c}"
            )
        logits = predict_logits(
            encoder, modality_tensor(test_ds, modality, b_tensor), batch_size
        )
        accs[name] = accuracy(logits, labels)
        per_class[name] = _per_class(logits, labels, c)
        all_logits.append(logits)
    fused = None
    if fusion == "average-logits" and len(all_logits) > 1:
        mean_logits = np.mean(all_logits, axis=0)
        fused = accuracy(mean_logits, labels)
    return EvalReport(
        accuracies=accs, per_class=per_class, fused_acc=fused,
        meta=dict(meta or {}),
    )


def fake_probabilities(disc, encoder, clips, batch_size=64):
    """Per-frame fake-class probability of an encoder's features, [N*T]."""
    from ..data.io import frame_onehot

    probs = []
    t = clips.shape[1]
    for start in range(0, clips.shape[0], batch_size):
        chunk = clips[start : start + batch_size]
        b = chunk.shape[0]
        feats = encoder.forward(chunk, train=False).features.reshape(b * t, -1)
        onehot = None
        if disc.cfg.frames > 1 and disc.cfg.use_frame_onehot:
            onehot = frame_onehot(b, t).reshape(b * t, t)
        logits = disc.forward(feats, onehot, train=False)
        probs.append(softmax(logits)[:, disc.cfg.game_classes])
    return np.concatenate(probs)


def discriminator_fake_probability(disc, teacher, clips, batch_size=64):
    """Mean fake-class probability of teacher features for given clips."""
    return float(fake_probabilities(disc, teacher, clips, batch_size).mean())


def realfake_accuracy(disc, real_encoder, real_clips, fake_encoder, fake_clips,
                      batch_size=64):
    """Balanced real/fake discrimination accuracy at threshold 0.5.

    0.5 means the discriminator cannot tell hallucinated features from
    genuine ones (the intended equilibrium).
    """
    pf = fake_probabilities(disc, fake_encoder, fake_clips, batch_size)
    pr = fake_probabilities(disc, real_encoder, real_clips, batch_size)
    return 0.5 * (float((pf > 0.5).mean()) + float((pr <= 0.5).mean()))
