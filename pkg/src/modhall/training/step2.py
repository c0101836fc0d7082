"""Step 2: adversarial hallucination learning against a frozen teacher.

The hallucination network H starts as a copy of the trained privileged-
modality (teacher) encoder and consumes the test modality. A discriminator
D scores per-frame features concatenated with the frame-index one-hot and
outputs game_classes+1 logits (true classes + a fake slot).

Each step plays both sides on the same batch:

  D update   minimize CE(D(H(x_a)||y^t), [0..0,1]) + CE(D(E_d(x_b)||y^t), [y||0])
             over theta_D, hallucinated features treated as constants.
  G update   minimize CE(D(H(x_a)||y^t), [y||0]) over theta_H with theta_D
             fixed: the label-flipping form of the minimax game (the
             ascending form is available via generator_target="ascend").

No auxiliary classification loss touches H: its classifier head is the
teacher's, inherited at init and excluded from generator gradients, so
any class accuracy of the hallucinated features is earned through the
extended-label game alone. Losses average per frame, then over the batch.
"""

from dataclasses import dataclass, field
import os

import numpy as np

from ..errors import TrainingError
from ..losses import cross_entropy, softmax
from ..models.checkpoint import (
    copy_params, load_encoder, params_hash, save_discriminator, save_encoder,
)
from ..models.discriminator import DiscConfig, build_discriminator
from ..models.encoder import build_encoder
from ..optim import Adam
from ..rng import substream
from ..data.io import ClipBatch, frame_onehot
from .common import (
    accuracy, predict_logits, restore_params, snapshot_params, train_val_split,
)
from .fusion import fuse_logits
from .labels import extended_label_batch


@dataclass
class Step2Config:
    epochs: int
    batch_size: int = 32
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    seed: int = 0
    val_fraction: float = 0.1
    disc_variant: str = "shallow"
    width_scale: float = 0.125
    game_classes: int = None      # None -> dataset's class count
    use_frame_onehot: bool = True
    generator_target: str = "flip"  # flip | ascend
    d_steps: int = 1
    g_steps: int = 1

    def resolved_game_classes(self, num_classes):
        return num_classes if self.game_classes is None else self.game_classes


@dataclass
class AdversarialState:
    teacher: object
    hall: object
    disc: object
    opt_g: Adam
    opt_d: Adam
    cfg: Step2Config
    game_classes: int
    step: int = 0
    teacher_hash: str = ""
    meters: dict = field(default_factory=dict)


def init_hallucination_from_teacher(teacher):
    """Fresh encoder with parameters equal to the teacher's.

    Accepts a StreamEncoder or a checkpoint path.
    """
    if isinstance(teacher, (str, os.PathLike)):
        teacher, _ = load_encoder(teacher)
    hall = build_encoder(teacher.cfg)
    return copy_params(teacher, hall)


def build_game_discriminator(teacher, cfg, num_classes, rng=None):
    game_c = cfg.resolved_game_classes(num_classes)
    dcfg = DiscConfig(
        feat_dim=teacher.d_out,
        frames=teacher.cfg.frames,
        game_classes=game_c,
        variant=cfg.disc_variant,
        width_scale=cfg.width_scale,
        use_frame_onehot=cfg.use_frame_onehot,
    )
    return build_discriminator(dcfg, rng=rng)


def _frame_rows(batch):
    """Per-frame label rows and one-hot rows for a ClipBatch."""
    b, t = batch.frame_index_onehot.shape[:2]
    y_rows = np.repeat(batch.class_label, t)
    onehot_rows = batch.frame_index_onehot.reshape(b * t, t)
    return y_rows, onehot_rows


def discriminator_game_loss(disc, f_fake, f_real, onehot_rows, y_rows,
                            game_classes, train=True):
    """Both discriminator terms in one stacked forward.

    Returns (loss_fake, loss_real, dlogits, fake_logits). dlogits encodes
    the SUM of the two per-term means, ready for disc backward.
    """
    n = f_fake.shape[0]
    feats = np.concatenate([f_fake, f_real], axis=0)
    onehot = None
    if onehot_rows is not None:
        onehot = np.concatenate([onehot_rows, onehot_rows], axis=0)
    logits = disc.forward(feats, onehot, train=train)
    ext_fake = extended_label_batch(y_rows, "hallucinated", game_classes)
    ext_real = extended_label_batch(y_rows, "teacher", game_classes)
    loss_fake, d_fake = cross_entropy(logits[:n], ext_fake)
    loss_real, d_real = cross_entropy(logits[n:], ext_real)
    dlogits = np.concatenate([d_fake, d_real], axis=0)
    return loss_fake, loss_real, dlogits, logits[:n]


def generator_game_loss(disc, f_fake, onehot_rows, y_rows, game_classes,
                        target="flip", train=True):
    """Generator objective; returns (loss, gradient w.r.t. f_fake).

    "flip": descend CE toward the real extended label [y||0].
    "ascend": ascend the discriminator's fake-term CE (saturating form).
    Discriminator parameters accumulate gradients here; callers must not
    step them (they are zeroed at the next discriminator update).
    """
    logits = disc.forward(f_fake, onehot_rows, train=train)
    if target == "flip":
        ext = extended_label_batch(y_rows, "teacher", game_classes)
        loss, dlogits = cross_entropy(logits, ext)
    elif target == "ascend":
        ext = extended_label_batch(y_rows, "hallucinated", game_classes)
        loss, dlogits = cross_entropy(logits, ext)
        loss, dlogits = -loss, -dlogits
    else:
        raise ValueError(f"unknown generator target '{target}'")
    return loss, disc.backward(dlogits)


def adversarial_step(state, batch):
    """One discriminator update then one generator update on one batch."""
    cfg = state.cfg
    game_c = state.game_classes
    b, t = batch.frame_index_onehot.shape[:2]
    y_rows, onehot_rows = _frame_rows(batch)
    if not state.disc.cfg.use_frame_onehot or t == 1:
        onehot_rows = None

    f_real = state.teacher.forward(batch.modality_b, train=False).features
    f_real = f_real.reshape(b * t, -1)

    hall_out = state.hall.forward(batch.modality_a, train=True)
    f_fake = hall_out.features.reshape(b * t, -1)

    loss_fake = loss_real = 0.0
    fake_logits = None
    for _ in range(cfg.d_steps):
        state.opt_d.zero_grads()
        loss_fake, loss_real, dlogits, fake_logits = discriminator_game_loss(
            state.disc, f_fake, f_real, onehot_rows, y_rows, game_c
        )
        state.disc.backward(dlogits)
        state.opt_d.step()

    g_loss = 0.0
    for k in range(cfg.g_steps):
        if k > 0:  # parameters moved; refresh features and caches
            hall_out = state.hall.forward(batch.modality_a, train=True)
            f_fake = hall_out.features.reshape(b * t, -1)
        state.opt_g.zero_grads()
        g_loss, gfeat = generator_game_loss(
            state.disc, f_fake, onehot_rows, y_rows, game_c,
            target=cfg.generator_target,
        )
        state.hall.backward(gfeat=gfeat.reshape(b, t, -1))
        state.opt_g.step()

    if not (np.isfinite(loss_fake) and np.isfinite(loss_real) and np.isfinite(g_loss)):
        raise TrainingError(f"adversarial loss became non-finite at step {state.step}")

    probs = softmax(fake_logits)
    p_fake = float(probs[:, game_c].mean())
    real_probs = softmax(state.disc.forward(
        f_real, onehot_rows, train=False))
    # binary real/fake discrimination over both row groups
    rf_acc = 0.5 * (
        float((probs[:, game_c] > 0.5).mean())
        + float((real_probs[:, game_c] <= 0.5).mean())
    )
    state.step += 1
    return {
        "d_loss_fake": float(loss_fake),
        "d_loss_real": float(loss_real),
        "g_loss": float(g_loss),
        "p_fake": p_fake,
        "realfake_acc": rf_acc,
    }


def train_step2(teacher, dataset, cfg, *, a_encoder=None, workdir=None,
                log_sink=None):
    """Run the adversarial game; returns (hall, disc, log records).

    Model selection keeps the epoch whose validation metric is best:
    fused (modality-A encoder + hallucination) accuracy when a_encoder is
    given, else hallucination accuracy alone.
    """
    if isinstance(teacher, (str, os.PathLike)):
        teacher, _ = load_encoder(teacher)
    num_classes = dataset.num_classes
    game_c = cfg.resolved_game_classes(num_classes)
    hall = init_hallucination_from_teacher(teacher)
    disc = build_game_discriminator(
        teacher, cfg, num_classes, rng=substream(cfg.seed, "step2", "disc-init")
    )
    state = AdversarialState(
        teacher=teacher, hall=hall, disc=disc,
        opt_g=Adam(hall.params(), lr=cfg.lr_g),
        opt_d=Adam(disc.params(), lr=cfg.lr_d),
        cfg=cfg, game_classes=game_c,
        teacher_hash=params_hash(teacher),
    )

    train_idx, val_idx = train_val_split(len(dataset), cfg.val_fraction)
    a_val = dataset.a[val_idx]
    y_val = dataset.labels[val_idx]
    a_val_logits = None
    if a_encoder is not None:
        a_val_logits = predict_logits(a_encoder, a_val)

    log = []
    best = (-1.0, snapshot_params(hall), snapshot_params(disc))
    for epoch in range(cfg.epochs):
        rng = substream(cfg.seed, "step2", "epoch", epoch)
        sums, nb = {}, 0
        for batch in _train_batches(dataset, train_idx, cfg.batch_size, rng):
            metrics = adversarial_step(state, batch)
            for k, v in metrics.items():
                sums[k] = sums.get(k, 0.0) + v
            nb += 1
        hall_val_logits = predict_logits(hall, a_val)
        hall_acc = accuracy(hall_val_logits, y_val)
        if a_val_logits is not None:
            select_acc = accuracy(fuse_logits(a_val_logits, hall_val_logits), y_val)
        else:
            select_acc = hall_acc
        rec = {"stage": "step2", "epoch": epoch,
               **{k: v / max(nb, 1) for k, v in sums.items()},
               "hall_val_acc": hall_acc, "select_acc": select_acc}
        log.append(rec)
        if log_sink is not None:
            log_sink(rec)
        if select_acc >= best[0]:
            best = (select_acc, snapshot_params(hall), snapshot_params(disc))

    if cfg.epochs > 0:
        restore_params(hall, best[1])
        restore_params(disc, best[2])
    if params_hash(teacher) != state.teacher_hash:
        raise TrainingError("teacher parameters changed during step 2")
    if workdir is not None:
        save_encoder(os.path.join(workdir, "hallucination.npz"), hall)
        save_discriminator(os.path.join(workdir, "discriminator.npz"), disc)
    return hall, disc, log


def _train_batches(dataset, train_idx, batch_size, rng):
    order = rng.permutation(train_idx)
    b_all = dataset.b_encoded()
    t = dataset.frames
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        yield _make_batch(dataset, b_all, idx, t)


def _make_batch(dataset, b_all, idx, t):
    return ClipBatch(
        modality_a=dataset.a[idx],
        modality_b=b_all[idx],
        class_label=dataset.labels[idx],
        frame_index_onehot=frame_onehot(len(idx), t),
    )
