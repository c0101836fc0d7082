"""Hallucination by feature regression instead of an adversarial game.

The hallucination network starts from the depth teacher (same init as the
adversarial variant) and is pulled toward the teacher's features with a
squared-error term, plus class_weight times a cross-entropy term through
its own readout. Unlike the adversarial variant the readout trains here;
the regression alone has no mechanism to keep features class-separable,
so it needs the crutch. Results are known to be sensitive to class_weight.
"""

import numpy as np

from ..errors import TrainingError
from ..losses import cross_entropy_index, mse
from ..optim import Adam
from ..rng import substream
from ..training.common import (
    accuracy, predict_features, predict_logits, restore_params,
    snapshot_params, train_val_split,
)
from ..training.step2 import init_hallucination_from_teacher


def train_euclidean_hallucination(teacher, dataset, *, epochs, class_weight=1.0,
                                  batch_size=32, lr=1e-4, seed=0,
                                  val_fraction=0.1, log_sink=None):
    """Regress hallucinated features onto frozen teacher features.

    Returns (hallucination_encoder, log). Loss per batch is
    ``mse(F_hall, F_teacher) + class_weight * ce(logits_hall, y)``.
    """
    if class_weight < 0:
        raise ValueError("class_weight must be >= 0")
    hall = init_hallucination_from_teacher(teacher)
    x_a, labels = dataset.a, dataset.labels
    # teacher is frozen: its features are constants, compute them once
    f_teacher = predict_features(teacher, dataset.b_encoded())
    train_idx, val_idx = train_val_split(len(dataset), val_fraction)
    opt = Adam(hall.params(), lr=lr)
    log = []
    best = (-1.0, snapshot_params(hall))
    for epoch in range(epochs):
        order = substream(seed, "euclid", epoch).permutation(train_idx)
        mse_sum, ce_sum = 0.0, 0.0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            out = hall.forward(x_a[idx], train=True)
            mse_loss, dfeat = mse(out.features, f_teacher[idx])
            ce_loss, dlogits = cross_entropy_index(out.logits, labels[idx])
            if not np.isfinite(mse_loss) or not np.isfinite(ce_loss):
                raise TrainingError(f"regression loss non-finite at epoch {epoch}")
            opt.zero_grads()
            hall.backward(gfeat=dfeat, glogits=class_weight * dlogits)
            opt.step()
            mse_sum += mse_loss * len(idx)
            ce_sum += float(ce_loss) * len(idx)
        val_acc = accuracy(predict_logits(hall, x_a[val_idx]), labels[val_idx])
        rec = {"stage": "euclidean", "epoch": epoch,
               "class_weight": class_weight,
               "train_mse": mse_sum / len(order), "train_ce": ce_sum / len(order),
               "val_acc": val_acc}
        log.append(rec)
        if log_sink is not None:
            log_sink(rec)
        if val_acc >= best[0]:
            best = (val_acc, snapshot_params(hall))
    if epochs > 0:
        restore_params(hall, best[1])
    return hall, log
