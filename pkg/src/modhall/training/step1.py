"""Step 1: supervised cross-entropy training of a single stream."""

import os

import numpy as np

from ..errors import TrainingError
from ..losses import cross_entropy_index
from ..models.checkpoint import save_encoder
from ..models.encoder import build_encoder
from ..optim import Adam
from ..rng import substream
from .common import (
    accuracy, predict_logits, restore_params, snapshot_params, train_val_split,
)


def _modality_tensor(ds, modality):
    if modality == "a":
        return ds.a
    if modality == "b":
        return ds.b_encoded()
    raise ValueError(f"unknown modality '{modality}'")


def train_step1(encoder, dataset, modality, *, epochs, batch_size=32, lr=1e-4,
                seed=0, val_fraction=0.1, workdir=None, log_sink=None):
    """Train one stream on class labels; keeps the best-validation weights.

    Returns (encoder, log records). epochs=0 is a no-op. Divergence raises
    TrainingError carrying the path of the last finite-loss snapshot (if a
    workdir was given).
    """
    x_all = _modality_tensor(dataset, modality)
    y_all = dataset.labels
    train_idx, val_idx = train_val_split(len(dataset), val_fraction)
    x_val, y_val = x_all[val_idx], y_all[val_idx]

    opt = Adam(encoder.params(), lr=lr)
    log = []
    best = (-1.0, snapshot_params(encoder))
    last_good = snapshot_params(encoder)

    for epoch in range(epochs):
        order = substream(seed, "step1", modality, epoch).permutation(train_idx)
        losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            out = encoder.forward(x_all[idx], train=True)
            loss, dlogits = cross_entropy_index(out.logits, y_all[idx])
            if not np.isfinite(loss):
                path = None
                if workdir is not None:
                    restore_params(encoder, last_good)
                    path = os.path.join(workdir, f"step1_{modality}_last_good.npz")
                    save_encoder(path, encoder)
                raise TrainingError(
                    f"step1[{modality}] loss became non-finite at epoch {epoch}",
                    last_good=path,
                )
            opt.zero_grads()
            encoder.backward(glogits=dlogits)
            opt.step()
            losses.append(float(loss))
        last_good = snapshot_params(encoder)
        val_acc = accuracy(predict_logits(encoder, x_val), y_val)
        rec = {
            "stage": "step1", "modality": modality, "epoch": epoch,
            "train_loss": float(np.mean(losses)), "val_acc": val_acc,
        }
        log.append(rec)
        if log_sink is not None:
            log_sink(rec)
        if val_acc >= best[0]:
            best = (val_acc, snapshot_params(encoder))

    if epochs > 0:
        restore_params(encoder, best[1])
    return encoder, log


def fit_stream(dataset, enc_cfg, modality, *, epochs, batch_size=32, lr=1e-4,
               seed=0, val_fraction=0.1, workdir=None, log_sink=None):
    """Build a stream (init substream keyed by modality) and run step 1.

    The same (enc_cfg, modality, seed, schedule) always yields identical
    weights, which lets orchestration reuse a trained stream wherever an
    experiment arm's configuration matches.
    """
    encoder = build_encoder(enc_cfg, rng=substream(seed, "init", modality))
    return train_step1(
        encoder, dataset, modality, epochs=epochs, batch_size=batch_size,
        lr=lr, seed=seed, val_fraction=val_fraction, workdir=workdir,
        log_sink=log_sink,
    )
