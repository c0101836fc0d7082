"""Finite-difference verification of the training losses.

Builds float64 toy models (a few hundred parameters) and compares the
analytic gradients of the Step-1 cross-entropy and both adversarial game
terms against central finite differences, exercising the exact production
loss code paths. Relative error uses max(|analytic|, |numeric|) as the
denominator; coordinates where both magnitudes fall below 1e-7 are
compared absolutely (FD noise dominates true zeros there).
"""

import numpy as np

from ..data.io import ClipBatch, frame_onehot
from ..losses import cross_entropy_index
from ..models.discriminator import DiscConfig, build_discriminator
from ..models.encoder import EncoderConfig, build_encoder
from ..rng import substream
from ..training.step2 import discriminator_game_loss, generator_game_loss


def max_relative_error(analytic, numeric, floor=1e-6):
    """max |a-n| / max(|a|, |n|, floor); floor absorbs FD noise at true zeros."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float((np.abs(a - n) / denom).max())


def gather_grads(models):
    return np.concatenate(
        [p.grad.ravel().copy() for m in models for p in m.params()]
    )


def numerical_gradient(loss_fn, models, h=1e-6):
    """Central differences over every parameter coordinate of models."""
    grads = []
    for m in models:
        for p in m.params():
            flat = p.value.ravel()
            g = np.empty_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                f1 = loss_fn()
                flat[i] = orig - h
                f0 = loss_fn()
                flat[i] = orig
                g[i] = (f1 - f0) / (2 * h)
            grads.append(g)
    return np.concatenate(grads)


_KINK_MARGIN = 2e-5  # required distance of every pre-activation from 0


def _build_toys(seed, c, t, batch):
    size = 16
    enc_cfg = EncoderConfig(
        num_classes=c, frames=t, image_size=size, widths=(2, 3, 4),
        bottleneck="pool+conv", d=4,
    )
    teacher = build_encoder(enc_cfg, rng=substream(seed, "gc", "t"), dtype=np.float64)
    hall = build_encoder(enc_cfg, rng=substream(seed, "gc", "h"), dtype=np.float64)
    dcfg = DiscConfig(
        feat_dim=4, frames=t, game_classes=c, variant="shallow",
        width_scale=0.008,
    )
    disc = build_discriminator(dcfg, rng=substream(seed, "gc", "d"), dtype=np.float64)
    rng = substream(seed, "gc", "x")
    # zero-init biases leave structurally exact-zero pre-activations
    # (all-zero receptive fields), which sit on the ReLU kink; draw small
    # nonzero biases instead so the margin scan below can succeed
    for model in (teacher, hall, disc):
        for name, p in model.named_params():
            if name.endswith(".b"):
                p.value[...] = rng.uniform(0.02, 0.12, p.value.shape)
    batch_data = ClipBatch(
        modality_a=rng.uniform(0, 1, (batch, t, size, size, 3)),
        modality_b=rng.uniform(0, 1, (batch, t, size, size, 3)),
        class_label=rng.integers(0, c, batch).astype(np.int64),
        frame_index_onehot=frame_onehot(batch, t, dtype=np.float64),
    )
    return teacher, hall, disc, batch_data


def _toy_setup(seed=0, c=2, t=2, batch=2, tries=32):
    """Toy models + batch whose rectifier inputs all clear the kink margin.

    Central differences are invalid at a ReLU kink, so draws where any
    pre-activation sits within _KINK_MARGIN of zero are rejected and the
    next seed is tried. Deterministic: the scan always starts at `seed`.
    """
    from .. import nn

    for k in range(tries):
        setup = _build_toys(seed + k, c, t, batch)
        teacher, hall, disc, batch_data = setup
        sink = []
        nn.set_prerelu_audit(sink)
        try:
            b, t_ = batch_data.frame_index_onehot.shape[:2]
            f_real = teacher.forward(batch_data.modality_b).features.reshape(b * t_, -1)
            f_fake = hall.forward(batch_data.modality_a).features.reshape(b * t_, -1)
            y_rows = np.repeat(batch_data.class_label, t_)
            onehot_rows = batch_data.frame_index_onehot.reshape(b * t_, t_)
            discriminator_game_loss(disc, f_fake, f_real, onehot_rows, y_rows, c)
            generator_game_loss(disc, f_fake, onehot_rows, y_rows, c)
        finally:
            nn.set_prerelu_audit(None)
        if min(sink) > _KINK_MARGIN:
            return setup
    raise RuntimeError(f"no kink-free toy setup found in {tries} seeds")


def check_step1(seed=0, h=1e-6):
    teacher, _, _, batch = _toy_setup(seed)

    def loss_fn():
        out = teacher.forward(batch.modality_b, train=True)
        return cross_entropy_index(out.logits, batch.class_label)[0]

    out = teacher.forward(batch.modality_b, train=True)
    loss, dlogits = cross_entropy_index(out.logits, batch.class_label)
    teacher.zero_grads()
    teacher.backward(glogits=dlogits)
    analytic = gather_grads([teacher])
    numeric = numerical_gradient(loss_fn, [teacher], h)
    return max_relative_error(analytic, numeric)


def _game_inputs(teacher, hall, batch):
    b, t = batch.frame_index_onehot.shape[:2]
    f_real = teacher.forward(batch.modality_b, train=False).features.reshape(b * t, -1)
    f_fake = hall.forward(batch.modality_a, train=True).features.reshape(b * t, -1)
    y_rows = np.repeat(batch.class_label, t)
    onehot_rows = batch.frame_index_onehot.reshape(b * t, t)
    return f_real, f_fake, y_rows, onehot_rows


def check_discriminator_term(seed=0, h=1e-6):
    """D loss (both CE terms) differentiated w.r.t. discriminator params."""
    teacher, hall, disc, batch = _toy_setup(seed)
    c = teacher.cfg.num_classes
    f_real, f_fake, y_rows, onehot_rows = _game_inputs(teacher, hall, batch)

    def loss_fn():
        lf, lr, _, _ = discriminator_game_loss(
            disc, f_fake, f_real, onehot_rows, y_rows, c
        )
        return lf + lr

    lf, lr, dlogits, _ = discriminator_game_loss(
        disc, f_fake, f_real, onehot_rows, y_rows, c
    )
    disc.zero_grads()
    disc.backward(dlogits)
    analytic = gather_grads([disc])
    numeric = numerical_gradient(loss_fn, [disc], h)
    return max_relative_error(analytic, numeric)


def check_generator_term(seed=0, h=1e-6):
    """Label-flipped generator loss differentiated w.r.t. hallucination params."""
    teacher, hall, disc, batch = _toy_setup(seed)
    c = teacher.cfg.num_classes
    b, t = batch.frame_index_onehot.shape[:2]
    y_rows = np.repeat(batch.class_label, t)
    onehot_rows = batch.frame_index_onehot.reshape(b * t, t)

    def loss_fn():
        f_fake = hall.forward(batch.modality_a, train=True).features.reshape(b * t, -1)
        loss, _ = generator_game_loss(
            disc, f_fake, onehot_rows, y_rows, c, target="flip"
        )
        return loss

    f_fake = hall.forward(batch.modality_a, train=True).features.reshape(b * t, -1)
    loss, gfeat = generator_game_loss(
        disc, f_fake, onehot_rows, y_rows, c, target="flip"
    )
    hall.zero_grads()
    hall.backward(gfeat=gfeat.reshape(b, t, -1))
    analytic = gather_grads([hall])
    numeric = numerical_gradient(loss_fn, [hall], h)
    return max_relative_error(analytic, numeric)


def run_gradcheck(seed=0):
    """All three loss checks; values are max relative errors."""
    return {
        "step1_ce": check_step1(seed),
        "discriminator_term": check_discriminator_term(seed),
        "generator_term": check_generator_term(seed),
    }
