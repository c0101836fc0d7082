"""Two-stream fine-tuning with modality dropout.

Fine-tunes both streams jointly on fused logits; each modality's input is
zeroed per sample with its drop probability, teaching the fused model to
survive a missing modality. drop probabilities of 0 give plain two-stream
fine-tuning (bit-identical under the same seed: the Bernoulli draws are
consumed either way).
"""

import numpy as np

from ..errors import ConfigError, TrainingError
from ..losses import cross_entropy_index
from ..models.checkpoint import copy_params
from ..models.encoder import build_encoder
from ..optim import Adam
from ..rng import substream
from ..training.common import (
    accuracy, predict_logits, restore_params, snapshot_params, train_val_split,
)
from ..training.fusion import fuse_logits


def train_two_stream_finetune(enc_a, enc_b, dataset, *, epochs, drop_prob_a=0.0,
                              drop_prob_b=0.0, batch_size=32, lr=1e-4, seed=0,
                              val_fraction=0.1, log_sink=None):
    """Returns (tuned_a, tuned_b, log); the input encoders are not mutated."""
    for name, p in (("drop_prob_a", drop_prob_a), ("drop_prob_b", drop_prob_b)):
        if not (0.0 <= p < 1.0):
            raise ConfigError(f"{name} must lie in [0, 1)")

    a = copy_params(enc_a, build_encoder(enc_a.cfg))
    b = copy_params(enc_b, build_encoder(enc_b.cfg))
    x_a, y_all = dataset.a, dataset.labels
    x_b = dataset.b_encoded()
    train_idx, val_idx = train_val_split(len(dataset), val_fraction)

    opt = Adam(a.params() + b.params(), lr=lr)
    log = []
    best = (-1.0, snapshot_params(a), snapshot_params(b))
    for epoch in range(epochs):
        rng = substream(seed, "moddrop", epoch)
        order = rng.permutation(train_idx)
        losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            xa = x_a[idx]
            xb = x_b[idx]
            keep_a = rng.random(len(idx)) >= drop_prob_a
            keep_b = rng.random(len(idx)) >= drop_prob_b
            if not keep_a.all():
                xa = xa * keep_a[:, None, None, None, None]
            if not keep_b.all():
                xb = xb * keep_b[:, None, None, None, None]
            out_a = a.forward(xa, train=True)
            out_b = b.forward(xb, train=True)
            loss, dlogits = cross_entropy_index(
                fuse_logits(out_a.logits, out_b.logits), y_all[idx]
            )
            if not np.isfinite(loss):
                raise TrainingError(f"fine-tuning loss non-finite at epoch {epoch}")
            opt.zero_grads()
            a.backward(glogits=0.5 * dlogits)
            b.backward(glogits=0.5 * dlogits)
            opt.step()
            losses.append(float(loss))
        val_fused = fuse_logits(
            predict_logits(a, x_a[val_idx]), predict_logits(b, x_b[val_idx])
        )
        val_acc = accuracy(val_fused, y_all[val_idx])
        rec = {"stage": "moddrop", "epoch": epoch,
               "train_loss": float(np.mean(losses)), "val_acc": val_acc,
               "drop_prob_a": drop_prob_a, "drop_prob_b": drop_prob_b}
        log.append(rec)
        if log_sink is not None:
            log_sink(rec)
        if val_acc >= best[0]:
            best = (val_acc, snapshot_params(a), snapshot_params(b))
    if epochs > 0:
        restore_params(a, best[1])
        restore_params(b, best[2])
    return a, b, log
