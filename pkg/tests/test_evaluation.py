"""Evaluation layer: scoring, sweeps, switch points, gradient checks."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modhall.config import ExperimentConfig
from modhall.errors import ConfigError, DataError
from modhall.evaluation import (
    ablation_arms,
    detect_switch_point,
    evaluate,
    max_relative_error,
    noise_sweep,
    run_gradcheck,
)
from modhall.evaluation.evaluate import realfake_accuracy
from modhall.evaluation.sweep import SweepResult, SweepRow
from modhall.models import DiscConfig, build_discriminator, build_encoder
from modhall.training import Step2Config, fuse_logits, train_step2
from modhall.training.common import accuracy, predict_logits
from modhall.training.step1 import fit_stream


@pytest.fixture(scope="module")
def trained(tiny_data, tiny_enc_cfg):
    """One tiny A stream, B stream, and adversarial pair for the module."""
    train, test = tiny_data
    enc_a, _ = fit_stream(train, tiny_enc_cfg, "a", epochs=2, seed=0)
    enc_b, _ = fit_stream(train, tiny_enc_cfg, "b", epochs=2, seed=0)
    hall, disc, _ = train_step2(enc_b, train, Step2Config(epochs=1, seed=0))
    return enc_a, enc_b, hall, disc, train, test


class TestEvaluate:
    def test_fusion_is_logit_mean(self, trained):
        enc_a, enc_b, _, _, _, test = trained
        rep = evaluate(
            [("a", enc_a, "a"), ("b", enc_b, "b")], test
        )
        la = predict_logits(enc_a, test.a)
        lb = predict_logits(enc_b, test.b_encoded())
        assert rep.fused_acc == accuracy(fuse_logits(la, lb), test.labels)
        assert rep.accuracies["a"] == accuracy(la, test.labels)

    def test_single_stream_has_no_fused(self, trained):
        enc_a, _, _, _, _, test = trained
        rep = evaluate([("a", enc_a, "a")], test)
        assert rep.fused_acc is None
        assert set(rep.accuracies) == {"a"}

    def test_fusion_none(self, trained):
        enc_a, enc_b, _, _, _, test = trained
        rep = evaluate(
            [("a", enc_a, "a"), ("b", enc_b, "b")], test, fusion="none"
        )
        assert rep.fused_acc is None

    def test_per_class_mean_matches_overall(self, trained):
        # balanced test split: class mean equals overall accuracy
        enc_a, _, _, _, _, test = trained
        rep = evaluate([("a", enc_a, "a")], test)
        assert np.isclose(np.mean(rep.per_class["a"]), rep.accuracies["a"])

    def test_b_tensor_override(self, trained):
        _, enc_b, _, _, _, test = trained
        blank = np.zeros_like(test.b_encoded())
        rep = evaluate([("b", enc_b, "b")], test, b_tensor=blank)
        direct = accuracy(predict_logits(enc_b, blank), test.labels)
        assert rep.accuracies["b"] == direct

    def test_repeated_calls_agree(self, trained):
        enc_a, enc_b, _, _, _, test = trained
        streams = [("a", enc_a, "a"), ("b", enc_b, "b")]
        r1 = evaluate(streams, test)
        r2 = evaluate(streams, test)
        assert r1.to_dict() == r2.to_dict()

    def test_bad_inputs(self, trained, tiny_enc_cfg):
        enc_a, _, _, _, _, test = trained
        with pytest.raises(DataError, match="fusion mode"):
            evaluate([("a", enc_a, "a")], test, fusion="product")
        with pytest.raises(DataError, match="no streams"):
            evaluate([], test)
        wrong = build_encoder(
            dataclasses.replace(tiny_enc_cfg, num_classes=5)
        )
        with pytest.raises(DataError, match="predicts 5 classes"):
            evaluate([("w", wrong, "a")], test)

    def test_meta_passthrough(self, trained):
        enc_a, _, _, _, _, test = trained
        rep = evaluate([("a", enc_a, "a")], test, meta={"tag": 3})
        assert rep.to_dict()["tag"] == 3


class TestRealFake:
    def test_perfect_and_blind_bounds(self, trained):
        _, enc_b, hall, disc, _, test = trained
        acc = realfake_accuracy(
            disc, enc_b, test.b_encoded(), hall, test.a
        )
        assert 0.0 <= acc <= 1.0

    def test_symmetric_encoder_is_half(self, trained):
        # same encoder on both sides: every frame lands on the same side
        # of the threshold, so the balanced score is exactly 0.5
        _, enc_b, _, disc, _, test = trained
        b = test.b_encoded()
        acc = realfake_accuracy(disc, enc_b, b, enc_b, b)
        assert acc == 0.5


class TestSweep:
    def test_rows_and_flat_hall_curve(self, trained):
        enc_a, enc_b, hall, disc, _, test = trained
        res = noise_sweep(
            enc_a, enc_b, hall, disc, test, variances=(0.0, 0.5, 2.0), seed=1
        )
        assert [r.variance for r in res.rows] == [0.0, 0.5, 2.0]
        hall_accs = {r.hall_fused_acc for r in res.rows}
        assert len(hall_accs) == 1  # never sees B, cannot move
        assert res.void_row is not None
        assert res.void_row.variance == float("inf")
        assert res.void_row.hall_fused_acc in hall_accs

    def test_clean_row_matches_evaluate(self, trained):
        enc_a, enc_b, hall, disc, _, test = trained
        res = noise_sweep(
            enc_a, enc_b, hall, disc, test, variances=(0.0,),
            include_void=False,
        )
        la = predict_logits(enc_a, test.a)
        lb = predict_logits(enc_b, test.b_encoded())
        assert res.rows[0].two_stream_acc == accuracy(
            fuse_logits(la, lb), test.labels
        )

    def test_deterministic(self, trained):
        enc_a, enc_b, hall, disc, _, test = trained
        kw = dict(variances=(0.0, 1.0), seed=9)
        r1 = noise_sweep(enc_a, enc_b, hall, disc, test, **kw)
        r2 = noise_sweep(enc_a, enc_b, hall, disc, test, **kw)
        assert r1.to_dict() == r2.to_dict()

    @pytest.mark.parametrize("bad", [(), (0.1, 0.2), (0.0, 0.2, 0.2), (0.0, 0.3, 0.1)])
    def test_bad_grids(self, trained, bad):
        enc_a, enc_b, hall, disc, _, test = trained
        with pytest.raises(ConfigError):
            noise_sweep(enc_a, enc_b, hall, disc, test, variances=bad)


def _rows(pfakes):
    return [SweepRow(float(i), 0.5, 0.5, p) for i, p in enumerate(pfakes)]


class TestSwitchPoint:
    def test_first_crossing(self):
        res = SweepResult(rows=_rows([0.1, 0.3, 0.7, 0.9]))
        assert detect_switch_point(res, threshold=0.5, margin=0.1) == 2.0

    def test_margin_blocks_grazing(self):
        # 0.55 exceeds the bare threshold but not threshold+margin
        assert detect_switch_point(_rows([0.2, 0.55, 0.9]), 0.5, 0.1) == 2.0

    def test_none_when_flat(self):
        assert detect_switch_point(_rows([0.1, 0.2, 0.3]), 0.5, 0.1) is None

    def test_accepts_plain_row_list(self):
        assert detect_switch_point(_rows([0.9]), 0.5, 0.1) == 0.0

    @given(
        pfakes=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8),
        thr=st.floats(0.0, 0.9),
    )
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_threshold(self, pfakes, thr):
        # raising the threshold can only push the switch later (or to None)
        rows = _rows(pfakes)
        lo = detect_switch_point(rows, thr, 0.05)
        hi = detect_switch_point(rows, thr + 0.1, 0.05)
        if hi is not None:
            assert lo is not None
            assert lo <= hi


class TestAblationArms:
    def test_bottleneck_size_arms(self):
        cfg = ExperimentConfig()
        arms = ablation_arms("bottleneck-size", cfg)
        assert [n for n, _ in arms] == ["d=128", "d=2048"]
        assert arms[1][1].model.d == 2048
        # base config untouched
        assert cfg.model.d == 128

    def test_variant_arms(self):
        arms = ablation_arms("bottleneck-variant", ExperimentConfig())
        assert [n for n, _ in arms] == [
            "none", "one-conv", "spatial-conv+1d-conv", "pool+conv",
        ]

    def test_discriminator_task_arms(self):
        arms = dict(ablation_arms("discriminator-task", ExperimentConfig()))
        assert arms["binary"].training.game_classes == 1
        assert arms["class-on-features"].model.use_frame_onehot is False
        assert arms["class-on-features||frame"].training.game_classes is None

    def test_unknown_suite(self):
        with pytest.raises(ConfigError, match="unknown ablation suite"):
            ablation_arms("optimizer", ExperimentConfig())


class TestGradcheck:
    def test_all_terms_small(self):
        errs = run_gradcheck(seed=0)
        assert set(errs) == {"step1_ce", "discriminator_term", "generator_term"}
        for name, err in errs.items():
            assert err <= 1e-4, f"{name}: {err}"

    def test_max_relative_error_floor(self):
        a = {"w": np.array([0.0, 1.0])}
        n = {"w": np.array([1e-9, 1.0])}
        # tiny absolute gap on a tiny gradient stays below the floor ratio
        assert max_relative_error(a, n) < 1e-2
