"""Shared helpers for training loops and evaluation."""

import numpy as np


def predict_logits(encoder, clips, batch_size=64):
    """Batched eval-mode forward; returns [N, C] logits."""
    outs = []
    for start in range(0, clips.shape[0], batch_size):
        out = encoder.forward(clips[start : start + batch_size], train=False)
        outs.append(out.logits)
    return np.concatenate(outs, axis=0)


def predict_features(encoder, clips, batch_size=64):
    """Batched eval-mode forward; returns [N, T, d] features."""
    outs = []
    for start in range(0, clips.shape[0], batch_size):
        out = encoder.forward(clips[start : start + batch_size], train=False)
        outs.append(out.features)
    return np.concatenate(outs, axis=0)


def accuracy(logits, labels):
    return float((logits.argmax(axis=1) == labels).mean())


def snapshot_params(model):
    return [p.value.copy() for p in model.params()]


def restore_params(model, snap):
    for p, v in zip(model.params(), snap):
        p.value[...] = v


def train_val_split(n, val_fraction):
    """Deterministic tail split; class-interleaved data stays balanced."""
    n_val = int(round(n * val_fraction))
    n_val = min(max(n_val, 0), n - 1)
    return np.arange(0, n - n_val), np.arange(n - n_val, n)
