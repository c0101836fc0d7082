"""Baseline arms: ensemble, fine-tuning variants, regression and GAN controls."""

import numpy as np
import pytest

from modhall.baselines import (
    CrossModalAutoencoder,
    evaluate_autoencoder,
    load_autoencoder,
    save_autoencoder,
    train_autoencoder_baseline,
    train_euclidean_hallucination,
    train_naive_binary_gan,
    train_rgb_ensemble,
    train_two_stream_finetune,
)
from modhall.errors import ConfigError
from modhall.models import build_encoder, params_hash
from modhall.rng import substream
from modhall.training import Step2Config


@pytest.fixture(scope="module")
def tiny_train(tiny_data):
    return tiny_data[0]


@pytest.fixture()
def tiny_data_pair(tiny_data):
    return tiny_data


@pytest.fixture()
def two_encoders(tiny_enc_cfg):
    a = build_encoder(tiny_enc_cfg, rng=np.random.default_rng(1))
    b = build_encoder(tiny_enc_cfg, rng=np.random.default_rng(2))
    return a, b


class TestEnsemble:
    def test_members_differ(self, tiny_train, tiny_enc_cfg):
        members, logs = train_rgb_ensemble(
            tiny_train, tiny_enc_cfg, epochs=1, n_members=3, seed=0
        )
        assert len(members) == len(logs) == 3
        hashes = {params_hash(m) for m in members}
        # independently seeded inits must not collide
        assert len(hashes) == 3

    def test_deterministic(self, tiny_train, tiny_enc_cfg):
        train = tiny_train
        m1, _ = train_rgb_ensemble(train, tiny_enc_cfg, epochs=1, seed=7)
        m2, _ = train_rgb_ensemble(train, tiny_enc_cfg, epochs=1, seed=7)
        assert [params_hash(m) for m in m1] == [params_hash(m) for m in m2]

    def test_log_carries_member_index(self, tiny_train, tiny_enc_cfg):
        seen = []
        train_rgb_ensemble(
            tiny_train, tiny_enc_cfg, epochs=1, n_members=2,
            seed=0, log_sink=seen.append,
        )
        assert sorted({rec["member"] for rec in seen}) == [0, 1]


class TestFinetune:
    def test_inputs_not_mutated(self, tiny_train, two_encoders):
        a, b = two_encoders
        ha, hb = params_hash(a), params_hash(b)
        train_two_stream_finetune(a, b, tiny_train, epochs=1)
        assert params_hash(a) == ha
        assert params_hash(b) == hb

    def test_zero_drop_deterministic(self, tiny_train, two_encoders):
        a, b = two_encoders
        train = tiny_train
        outs = [
            train_two_stream_finetune(a, b, train, epochs=2, seed=3)
            for _ in range(2)
        ]
        assert params_hash(outs[0][0]) == params_hash(outs[1][0])
        assert params_hash(outs[0][1]) == params_hash(outs[1][1])

    def test_dropping_changes_training(self, tiny_train, two_encoders):
        a, b = two_encoders
        train = tiny_train
        plain = train_two_stream_finetune(a, b, train, epochs=2, seed=3)
        dropped = train_two_stream_finetune(
            a, b, train, epochs=2, seed=3, drop_prob_a=0.5, drop_prob_b=0.5
        )
        assert params_hash(plain[0]) != params_hash(dropped[0])

    @pytest.mark.parametrize("kwargs", [{"drop_prob_a": 1.0}, {"drop_prob_b": -0.1}])
    def test_bad_drop_prob(self, tiny_train, two_encoders, kwargs):
        a, b = two_encoders
        with pytest.raises(ConfigError, match=r"must lie in \[0, 1\)"):
            train_two_stream_finetune(
                a, b, tiny_train, epochs=1, **kwargs
            )

    def test_log_records_drop_probs(self, tiny_train, two_encoders):
        a, b = two_encoders
        _, _, log = train_two_stream_finetune(
            a, b, tiny_train, epochs=1, drop_prob_b=0.25
        )
        assert log[0]["drop_prob_b"] == 0.25
        assert log[0]["stage"] == "moddrop"


class TestEuclidean:
    def test_zero_epochs_returns_teacher_clone(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        hall, log = train_euclidean_hallucination(
            teacher, tiny_train, epochs=0
        )
        assert params_hash(hall) == params_hash(teacher)
        assert log == []

    def test_teacher_frozen(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        before = params_hash(teacher)
        train_euclidean_hallucination(teacher, tiny_train, epochs=2)
        assert params_hash(teacher) == before

    def test_regression_error_decreases(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        _, log = train_euclidean_hallucination(
            teacher, tiny_train, epochs=6, lr=1e-3
        )
        assert log[-1]["train_mse"] < log[0]["train_mse"]

    def test_class_weight_changes_outcome(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        train = tiny_train
        h0, _ = train_euclidean_hallucination(
            teacher, train, epochs=2, class_weight=0.0
        )
        h10, _ = train_euclidean_hallucination(
            teacher, train, epochs=2, class_weight=10.0
        )
        assert params_hash(h0) != params_hash(h10)

    def test_negative_weight_rejected(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        with pytest.raises(ValueError, match="class_weight"):
            train_euclidean_hallucination(
                teacher, tiny_train, epochs=1, class_weight=-1.0
            )

    def test_log_fields(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        _, log = train_euclidean_hallucination(
            teacher, tiny_train, epochs=1, class_weight=0.5
        )
        rec = log[0]
        assert rec["stage"] == "euclidean"
        assert rec["class_weight"] == 0.5
        assert {"train_mse", "train_ce", "val_acc"} <= set(rec)


class TestNaiveBinaryGame:
    def test_two_unit_head(self, tiny_train, two_encoders):
        _, teacher = two_encoders
        cfg = Step2Config(epochs=1, seed=0)
        hall, disc, log = train_naive_binary_gan(
            teacher, tiny_train, cfg
        )
        assert disc.cfg.out_dim == 2
        assert disc.cfg.game_classes == 1
        # original config untouched
        assert cfg.game_classes is None
        assert len(log) >= 1

    def test_matches_degenerate_step2(self, tiny_train, two_encoders):
        # the wrapper must be exactly the class-collapsed game
        from modhall.training import train_step2

        _, teacher = two_encoders
        train = tiny_train
        h1, _, _ = train_naive_binary_gan(
            teacher, train, Step2Config(epochs=1, seed=5)
        )
        h2, _, _ = train_step2(
            teacher, train, Step2Config(epochs=1, seed=5, game_classes=1)
        )
        assert params_hash(h1) == params_hash(h2)


class TestAutoencoder:
    def test_reconstruction_shape(self, tiny_train, tiny_enc_cfg):
        ae = CrossModalAutoencoder(tiny_enc_cfg, rng=np.random.default_rng(0))
        train = tiny_train
        recon = ae.forward(train.a[:2], train=False)
        assert recon.shape == train.b_encoded()[:2].shape

    def test_too_few_blocks(self, tiny_enc_cfg):
        with pytest.raises(ValueError, match="at least 3"):
            CrossModalAutoencoder(tiny_enc_cfg, n_blocks=2)

    def test_training_reduces_error(self, tiny_train, tiny_enc_cfg):
        _, log = train_autoencoder_baseline(
            tiny_train, tiny_enc_cfg, epochs=6, lr=1e-3
        )
        assert log[-1]["train_recon_err"] < log[0]["train_recon_err"]

    def test_deterministic(self, tiny_train, tiny_enc_cfg):
        train = tiny_train
        ae1, _ = train_autoencoder_baseline(train, tiny_enc_cfg, epochs=1, seed=4)
        ae2, _ = train_autoencoder_baseline(train, tiny_enc_cfg, epochs=1, seed=4)
        assert params_hash(ae1) == params_hash(ae2)

    def test_save_load_roundtrip(self, tmp_path, tiny_train, tiny_enc_cfg):
        ae, _ = train_autoencoder_baseline(
            tiny_train, tiny_enc_cfg, epochs=1
        )
        path = tmp_path / "ae.npz"
        save_autoencoder(path, ae, extra={"note": "probe"})
        loaded, meta = load_autoencoder(path)
        assert params_hash(loaded) == params_hash(ae)
        assert meta["extra"]["note"] == "probe"
        assert meta["arch"]["n_blocks"] == 3

    def test_evaluate_report(self, tiny_data_pair, two_encoders, tiny_enc_cfg):
        a_enc, b_enc = two_encoders
        train, test = tiny_data_pair
        ae, _ = train_autoencoder_baseline(train, tiny_enc_cfg, epochs=1)
        rep = evaluate_autoencoder(ae, a_enc, b_enc, train, test)
        assert set(rep) == {
            "recon_b_acc", "fused_acc", "train_recon_err", "test_recon_err",
        }
        assert 0.0 <= rep["recon_b_acc"] <= 1.0
        assert 0.0 <= rep["fused_acc"] <= 1.0
        assert rep["train_recon_err"] > 0
        assert rep["test_recon_err"] > 0
