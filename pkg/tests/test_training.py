import dataclasses

import numpy as np
import pytest

from modhall.errors import LabelError, ShapeError, TrainingError
from modhall.models import params_hash
from modhall.training import (Step2Config, extend_label, extended_label_batch,
                              fit_stream, fuse_logits, train_step1,
                              train_step2)
from modhall.training.common import (accuracy, predict_logits,
                                     snapshot_params, restore_params,
                                     train_val_split)
from modhall.rng import substream


# --- extended game labels ---

def test_extend_label_teacher_keeps_class():
    np.testing.assert_array_equal(extend_label(2, "teacher", 4),
                                  [0, 0, 1, 0, 0])


def test_extend_label_hallucinated_uses_fake_slot():
    np.testing.assert_array_equal(extend_label(2, "hallucinated", 4),
                                  [0, 0, 0, 0, 1])


def test_extend_label_binary_degeneration():
    # game_classes=1: class identity vanishes from the game entirely
    np.testing.assert_array_equal(extend_label(0, "teacher", 1), [1, 0])
    np.testing.assert_array_equal(extend_label(0, "hallucinated", 1), [0, 1])


def test_extended_label_batch_matches_scalar_form(rng):
    y = rng.integers(0, 3, 10)
    for source in ("teacher", "hallucinated"):
        batch = extended_label_batch(y, source, 3)
        rows = np.stack([extend_label(int(c), source, 3) for c in y])
        np.testing.assert_array_equal(batch, rows)


def test_extended_label_batch_binary_ignores_class(rng):
    y = rng.integers(0, 4, 6)  # true classes, wider than the game's 1
    batch = extended_label_batch(y, "teacher", 1)
    np.testing.assert_array_equal(batch, np.tile([1.0, 0.0], (6, 1)))


def test_label_error_paths():
    with pytest.raises(LabelError, match="unknown source"):
        extend_label(0, "student", 4)
    with pytest.raises(LabelError, match="out of range"):
        extend_label(7, "teacher", 4)
    with pytest.raises(LabelError, match="out of range"):
        extended_label_batch(np.array([0, 9]), "teacher", 4)


# --- fusion ---

def test_fuse_logits_is_mean(rng):
    a, b = rng.random((3, 4)), rng.random((3, 4))
    np.testing.assert_allclose(fuse_logits(a, b), (a + b) / 2)
    with pytest.raises(ShapeError):
        fuse_logits(a, rng.random((3, 5)))


# --- shared helpers ---

def test_train_val_split_tail_and_bounds():
    tr, va = train_val_split(10, 0.2)
    np.testing.assert_array_equal(va, [8, 9])
    np.testing.assert_array_equal(tr, np.arange(8))
    tr, va = train_val_split(5, 0.0)
    assert len(va) == 0 and len(tr) == 5


def test_accuracy_and_predict(tiny_data, tiny_enc_cfg):
    from modhall.models import build_encoder

    train, _ = tiny_data
    enc = build_encoder(tiny_enc_cfg, rng=substream(0, "p"))
    logits = predict_logits(enc, train.a, batch_size=4)
    assert logits.shape == (len(train), 2)
    assert 0.0 <= accuracy(logits, train.labels) <= 1.0


def test_snapshot_restore_roundtrip(tiny_enc_cfg):
    from modhall.models import build_encoder

    enc = build_encoder(tiny_enc_cfg, rng=substream(0, "s"))
    h0 = params_hash(enc)
    snap = snapshot_params(enc)
    for p in enc.params():
        p.value[...] += 1.0
    assert params_hash(enc) != h0
    restore_params(enc, snap)
    assert params_hash(enc) == h0


# --- step 1 ---

def test_step1_deterministic_and_learns(tiny_data, tiny_enc_cfg):
    train, _ = tiny_data
    enc1, log1 = fit_stream(train, tiny_enc_cfg, "a", epochs=3, seed=0,
                            val_fraction=0.25)
    enc2, log2 = fit_stream(train, tiny_enc_cfg, "a", epochs=3, seed=0,
                            val_fraction=0.25)
    assert params_hash(enc1) == params_hash(enc2)
    assert log1 == log2
    assert [r["epoch"] for r in log1] == [0, 1, 2]
    assert log1[-1]["train_loss"] < log1[0]["train_loss"]


def test_step1_keeps_best_validation_weights(tiny_data, tiny_enc_cfg):
    from modhall.models import build_encoder

    train, _ = tiny_data
    enc = build_encoder(tiny_enc_cfg, rng=substream(0, "bv"))
    _, log = train_step1(enc, train, "b", epochs=3, seed=0, val_fraction=0.25)
    _, val_idx = train_val_split(len(train), 0.25)
    got = accuracy(predict_logits(enc, train.b_encoded()[val_idx]),
                   train.labels[val_idx])
    assert got == pytest.approx(max(r["val_acc"] for r in log))


def test_step1_divergence_saves_last_good(tiny_data, tiny_enc_cfg, tmp_path):
    from modhall.models import build_encoder, load_encoder

    train, _ = tiny_data
    enc = build_encoder(tiny_enc_cfg, rng=substream(0, "dv"))
    with pytest.raises(TrainingError) as exc:
        train_step1(enc, train, "a", epochs=4, lr=1e12, seed=0,
                    workdir=str(tmp_path))
    assert exc.value.last_good is not None
    rescued, _ = load_encoder(exc.value.last_good)
    assert np.all(np.isfinite(rescued.params()[0].value))


# --- step 2 ---

@pytest.fixture(scope="module")
def teacher(tiny_data, tiny_enc_cfg):
    train, _ = tiny_data
    enc, _ = fit_stream(train, tiny_enc_cfg, "b", epochs=2, seed=0,
                        val_fraction=0.25)
    return enc


def micro_cfg(**kw):
    base = dict(epochs=2, batch_size=6, seed=0, val_fraction=0.25,
                width_scale=0.05)
    base.update(kw)
    return Step2Config(**base)


def test_step2_freezes_teacher_and_moves_hallucination(tiny_data, teacher):
    train, _ = tiny_data
    before = params_hash(teacher)
    hall, disc, log = train_step2(teacher, train, micro_cfg())
    assert params_hash(teacher) == before
    assert params_hash(hall) != before
    assert disc.cfg.out_dim == train.num_classes + 1
    for rec in log:
        for key in ("d_loss_fake", "d_loss_real", "g_loss", "p_fake",
                    "realfake_acc", "hall_val_acc"):
            assert isinstance(rec[key], float)


def test_step2_deterministic(tiny_data, teacher):
    train, _ = tiny_data
    h1, d1, l1 = train_step2(teacher, train, micro_cfg())
    h2, d2, l2 = train_step2(teacher, train, micro_cfg())
    assert params_hash(h1) == params_hash(h2)
    assert params_hash(d1) == params_hash(d2)
    assert l1 == l2


def test_step2_binary_game_shrinks_head(tiny_data, teacher):
    train, _ = tiny_data
    hall, disc, _ = train_step2(teacher, train, micro_cfg(game_classes=1))
    assert disc.cfg.out_dim == 2
    assert disc.cfg.game_classes == 1


def test_step2_select_acc_uses_fused_when_a_encoder_given(
        tiny_data, teacher, tiny_enc_cfg):
    train, _ = tiny_data
    a_enc, _ = fit_stream(train, tiny_enc_cfg, "a", epochs=1, seed=0,
                          val_fraction=0.25)
    _, _, log = train_step2(teacher, train, micro_cfg(), a_encoder=a_enc)
    assert all("select_acc" in r for r in log)


def test_step2_ascend_target_runs(tiny_data, teacher):
    train, _ = tiny_data
    h1, _, _ = train_step2(teacher, train, micro_cfg())
    h2, _, _ = train_step2(teacher, train,
                           micro_cfg(generator_target="ascend"))
    assert params_hash(h1) != params_hash(h2)


def test_step2_accepts_checkpoint_path(tiny_data, teacher, tmp_path):
    from modhall.models import save_encoder

    train, _ = tiny_data
    path = str(tmp_path / "teacher.npz")
    save_encoder(path, teacher)
    h1, _, _ = train_step2(path, train, micro_cfg())
    h2, _, _ = train_step2(teacher, train, micro_cfg())
    assert params_hash(h1) == params_hash(h2)


def test_step2_config_resolved_game_classes():
    assert micro_cfg(game_classes=None).resolved_game_classes(4) == 4
    assert micro_cfg(game_classes=1).resolved_game_classes(4) == 1
