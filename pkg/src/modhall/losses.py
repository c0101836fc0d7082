"""Loss functions returning (scalar, dlogits) pairs."""

import numpy as np


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits):
    z = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def cross_entropy(logits, targets):
    """Mean cross-entropy against soft targets.

    logits: [N, K]; targets: [N, K] rows summing to 1 (one-hot or soft).
    Returns (loss, dloss/dlogits) with the 1/N already folded in.
    """
    n = logits.shape[0]
    lsm = log_softmax(logits)
    loss = -(targets * lsm).sum() / n
    dlogits = (softmax(logits) - targets) / n
    return loss, dlogits


def cross_entropy_index(logits, labels):
    """Cross-entropy against integer class labels [N]."""
    n, k = logits.shape
    onehot = np.zeros((n, k), dtype=logits.dtype)
    onehot[np.arange(n), labels] = 1.0
    return cross_entropy(logits, onehot)


def mse(pred, target):
    """Mean squared error over all elements; returns (loss, dpred)."""
    diff = pred - target
    loss = float((diff * diff).mean())
    return loss, (2.0 / diff.size) * diff
