"""Ablation suites: retrain controlled variants and tabulate them.

Three suites, each varying exactly one design axis while every arm shares
the same seed, data, and training schedule:

    bottleneck-size      feature dimension d in {128, 2048}
    bottleneck-variant   {none, one-conv, spatial-conv+1d-conv, pool+conv}
    discriminator-task   {binary, class-on-features, class-on-features||frame}

Arms train their own depth teacher when the architecture differs; arms
whose teacher matches a supplied pre-trained one reuse it (the build is
deterministic in (config, seed), so reuse changes nothing). The
adversarial step runs without the RGB stream here so that every arm is
selected on its own hallucination validation accuracy.
"""

import dataclasses

from ..config import ABLATION_SUITES, config_hash, encoder_config, step2_config
from ..errors import ConfigError
from ..training.common import accuracy, predict_logits
from ..training.step1 import fit_stream
from ..training.step2 import train_step2

_VARIANT_ARMS = ("none", "one-conv", "spatial-conv+1d-conv", "pool+conv")


def ablation_arms(suite, cfg):
    """[(arm name, arm ExperimentConfig)] for one suite."""
    mrep = lambda **kw: dataclasses.replace(
        cfg, model=dataclasses.replace(cfg.model, **kw))
    trep = lambda **kw: dataclasses.replace(
        cfg, training=dataclasses.replace(cfg.training, **kw))
    if suite == "bottleneck-size":
        return [("d=128", mrep(d=128)), ("d=2048", mrep(d=2048))]
    if suite == "bottleneck-variant":
        return [(v, mrep(bottleneck=v)) for v in _VARIANT_ARMS]
    if suite == "discriminator-task":
        base = dataclasses.replace(
            cfg, training=dataclasses.replace(cfg.training, game_classes=None))
        return [
            ("binary", dataclasses.replace(
                base, training=dataclasses.replace(base.training, game_classes=1))),
            ("class-on-features", dataclasses.replace(
                base, model=dataclasses.replace(base.model, use_frame_onehot=False))),
            ("class-on-features||frame", base),
        ]
    raise ConfigError([f"unknown ablation suite {suite!r} "
                       f"(choose from {ABLATION_SUITES})"])


def run_ablation(suite, cfg, train_ds, test_ds, *, teacher=None, log_sink=None):
    """Train and evaluate every arm of one suite.

    teacher: optional pre-trained depth stream reused by arms whose
    encoder architecture matches it. Returns a table dict with one row
    per arm carrying teacher/hallucination test accuracy, the final
    real/fake discrimination accuracy, and the arm's config hash.
    """
    rows = []
    for arm_name, arm_cfg in ablation_arms(suite, cfg):
        tr = arm_cfg.training
        sink = None
        if log_sink is not None:
            sink = lambda rec, _a=arm_name: log_sink(
                {**rec, "suite": suite, "arm": _a})
        enc_cfg = encoder_config(arm_cfg, num_classes=train_ds.num_classes)
        if teacher is not None and teacher.cfg == enc_cfg:
            arm_teacher = teacher
        else:
            arm_teacher, _ = fit_stream(
                train_ds, enc_cfg, "b", epochs=tr.step1_epochs,
                batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                val_fraction=tr.val_fraction, log_sink=sink,
            )
        hall, _disc, s2_log = train_step2(
            arm_teacher, train_ds, step2_config(arm_cfg), log_sink=sink,
        )
        rows.append({
            "arm": arm_name,
            "teacher_acc": accuracy(
                predict_logits(arm_teacher, test_ds.b_encoded()), test_ds.labels),
            "hall_acc": accuracy(
                predict_logits(hall, test_ds.a), test_ds.labels),
            "realfake_acc": s2_log[-1]["realfake_acc"] if s2_log else None,
            "p_fake": s2_log[-1]["p_fake"] if s2_log else None,
            "config_hash": config_hash(arm_cfg),
        })
    return {"suite": suite, "rows": rows}
