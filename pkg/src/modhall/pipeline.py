"""Staged experiment orchestration.

A run lives in one directory keyed by its config hash:

    <output root>/run-<hash12>/
        config.yaml        the exact configuration (hash source)
        manifest.json      stage -> artifact listing
        stages/<s>.done    completion markers (idempotent resume)
        logs/<s>.jsonl     metric records, no timestamps: two runs with
                           the same seed produce byte-identical logs
        data/  models/  eval/  report/

Stages run in a fixed order; a completed stage is skipped on rerun as
long as the config hash is unchanged. Requesting a stage whose
prerequisite has neither run nor been requested raises DependencyError
naming that stage. The output root comes from the config unless the
MODHALL_OUTPUT_ROOT environment variable overrides it.
"""

import dataclasses
import glob
import json
import os

import numpy as np

from .baselines import (
    load_autoencoder, save_autoencoder, train_autoencoder_baseline,
    train_euclidean_hallucination, train_naive_binary_gan, train_rgb_ensemble,
    train_two_stream_finetune,
)
from .config import (
    config_hash, encoder_config, parse_config, serialize_config, step2_config,
    synthetic_spec,
)
from .data.io import load_dataset, load_directory_dataset, save_dataset
from .data.synthetic import generate_synthetic
from .errors import ConfigError, DependencyError
from .evaluation.ablation import run_ablation
from .evaluation.evaluate import (
    discriminator_fake_probability, evaluate, realfake_accuracy,
)
from .evaluation.report import emit_report
from .evaluation.sweep import noise_sweep
from .models.checkpoint import (
    load_discriminator, load_encoder, params_hash, save_discriminator,
    save_encoder,
)
from .training.step1 import fit_stream
from .training.step2 import train_step2

STAGES = ("data", "step1", "step2", "baselines", "eval", "sweep", "ablate",
          "report")

_DEPS = {
    "data": (),
    "step1": ("data",),
    "step2": ("step1",),
    "baselines": ("step1",),
    "eval": ("step2",),
    "sweep": ("step2",),
    "ablate": ("data",),
    "report": ("eval",),
}

OUTPUT_ROOT_ENV = "MODHALL_OUTPUT_ROOT"


def resolve_output_root(cfg):
    return os.environ.get(OUTPUT_ROOT_ENV) or cfg.output.dir


def group_hash(cfg):
    """Config hash with the seed normalized: runs differing only in seed
    share it (the report merges them into per-seed columns)."""
    neutral = dataclasses.replace(
        cfg, training=dataclasses.replace(cfg.training, seed=0)
    )
    return config_hash(neutral)


def run_dir_for(cfg, root=None):
    root = resolve_output_root(cfg) if root is None else root
    return os.path.join(root, f"run-{config_hash(cfg)[:12]}")


class _JsonlLog:
    """Append-as-you-go metric log; deterministic byte-for-byte."""

    def __init__(self, path):
        self._f = open(path, "w")

    def __call__(self, rec):
        self._f.write(json.dumps(rec, sort_keys=True) + "\n")
        self._f.flush()

    def close(self):
        self._f.close()


class PipelineContext:
    def __init__(self, cfg):
        self.cfg = cfg
        self.chash = config_hash(cfg)
        self.ghash = group_hash(cfg)
        self.run_dir = run_dir_for(cfg)
        self._splits = {}

    def path(self, *parts):
        return os.path.join(self.run_dir, *parts)

    def model_path(self, name):
        return self.path("models", name)

    def split(self, name):
        if name not in self._splits:
            self._splits[name] = load_dataset(self.path("data"), name)
        return self._splits[name]

    def done(self, stage):
        marker = self.path("stages", stage + ".done")
        if not os.path.exists(marker):
            return False
        with open(marker) as f:
            return json.load(f).get("config_hash") == self.chash

    def mark_done(self, stage):
        with open(self.path("stages", stage + ".done"), "w") as f:
            json.dump({"stage": stage, "config_hash": self.chash}, f,
                      sort_keys=True)

    def save_encoder(self, name, encoder, **extra):
        save_encoder(self.model_path(name), encoder,
                     extra={"config_hash": self.chash, **extra})
        return {"path": f"models/{name}", "params_hash": params_hash(encoder)}

    def save_discriminator(self, name, disc, **extra):
        save_discriminator(self.model_path(name), disc,
                           extra={"config_hash": self.chash, **extra})
        return {"path": f"models/{name}", "params_hash": params_hash(disc)}

    def write_eval(self, name, doc):
        doc = {"config_hash": self.chash, "group_hash": self.ghash,
               "seed": self.cfg.training.seed, **doc}
        with open(self.path("eval", name), "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
        return {"path": f"eval/{name}"}


# --- stages ---

def _stage_data(ctx):
    cfg = ctx.cfg
    data_dir = ctx.path("data")
    if cfg.dataset.kind == "synthetic":
        spec = synthetic_spec(cfg.dataset, seed=cfg.training.seed)
        train, test = generate_synthetic(spec)
    else:
        t = cfg.dataset.frames_per_clip
        train = load_directory_dataset(
            os.path.join(cfg.dataset.root, "train"), t, "train")
        test = load_directory_dataset(
            os.path.join(cfg.dataset.root, "test"), t, "test")
    save_dataset({"train": train, "test": test}, data_dir)
    ctx._splits = {"train": train, "test": test}
    return [{"path": "data/meta.json"},
            {"path": "data/train/manifest.jsonl"},
            {"path": "data/test/manifest.jsonl"}]


def _stage_step1(ctx):
    cfg, tr = ctx.cfg, ctx.cfg.training
    train = ctx.split("train")
    enc_cfg = encoder_config(cfg, num_classes=train.num_classes)
    sink = _JsonlLog(ctx.path("logs", "step1.jsonl"))
    arts = []
    try:
        for modality, name in (("a", "step1_a.npz"), ("b", "step1_b.npz")):
            enc, _ = fit_stream(
                train, enc_cfg, modality, epochs=tr.step1_epochs,
                batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                val_fraction=tr.val_fraction, workdir=ctx.path("models"),
                log_sink=sink,
            )
            arts.append(ctx.save_encoder(name, enc, role=f"step1_{modality}"))
    finally:
        sink.close()
    return arts


def _stage_step2(ctx):
    tr = ctx.cfg.training
    train = ctx.split("train")
    teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
    a_enc, _ = load_encoder(ctx.model_path("step1_a.npz"))
    sink = _JsonlLog(ctx.path("logs", "step2.jsonl"))
    try:
        hall, disc, _log = train_step2(
            teacher, train, step2_config(ctx.cfg), a_encoder=a_enc,
            log_sink=sink,
        )
    finally:
        sink.close()
    return [ctx.save_encoder("hallucination.npz", hall, role="hallucination"),
            ctx.save_discriminator("discriminator.npz", disc)]


def _stage_baselines(ctx, kinds=None):
    cfg, tr, bl = ctx.cfg, ctx.cfg.training, ctx.cfg.baselines
    train = ctx.split("train")
    enc_cfg = encoder_config(cfg, num_classes=train.num_classes)
    sink = _JsonlLog(ctx.path("logs", "baselines.jsonl"))
    arts = []
    try:
        for kind in (bl.kinds if kinds is None else kinds):
            tagged = lambda rec, _k=kind: sink({**rec, "baseline": _k})
            if kind == "rgb-ensemble":
                members, _ = train_rgb_ensemble(
                    train, enc_cfg, epochs=tr.step1_epochs,
                    batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                    n_members=bl.ensemble_members,
                    val_fraction=tr.val_fraction, log_sink=tagged,
                )
                for k, m in enumerate(members):
                    arts.append(ctx.save_encoder(
                        f"ensemble_{k:02d}.npz", m, role="ensemble", member=k))
            elif kind == "moddrop":
                enc_a, _ = load_encoder(ctx.model_path("step1_a.npz"))
                enc_b, _ = load_encoder(ctx.model_path("step1_b.npz"))
                for prob, prefix in ((bl.moddrop_prob, "moddrop"),
                                     (0.0, "plain")):
                    ta, tb, _ = train_two_stream_finetune(
                        enc_a, enc_b, train, epochs=bl.finetune_epochs,
                        drop_prob_a=prob, drop_prob_b=prob,
                        batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                        val_fraction=tr.val_fraction, log_sink=tagged,
                    )
                    arts.append(ctx.save_encoder(
                        f"{prefix}_a.npz", ta, role=prefix, drop_prob=prob))
                    arts.append(ctx.save_encoder(
                        f"{prefix}_b.npz", tb, role=prefix, drop_prob=prob))
            elif kind == "cross-modal-autoencoder":
                ae, _ = train_autoencoder_baseline(
                    train, enc_cfg, epochs=bl.autoencoder_epochs,
                    batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                    val_fraction=tr.val_fraction, log_sink=tagged,
                )
                save_autoencoder(ctx.model_path("autoencoder.npz"), ae,
                                 extra={"config_hash": ctx.chash})
                arts.append({"path": "models/autoencoder.npz",
                             "params_hash": params_hash(ae)})
            elif kind == "naive-binary-gan":
                teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
                a_enc, _ = load_encoder(ctx.model_path("step1_a.npz"))
                hall_n, disc_n, _ = train_naive_binary_gan(
                    teacher, train, step2_config(cfg), a_encoder=a_enc,
                    log_sink=tagged,
                )
                arts.append(ctx.save_encoder(
                    "hall_naive.npz", hall_n, role="naive-binary"))
                arts.append(ctx.save_discriminator("disc_naive.npz", disc_n))
            elif kind == "euclidean-hallucination":
                teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
                epochs = (tr.step2_epochs if bl.euclidean_epochs is None
                          else bl.euclidean_epochs)
                for i, w in enumerate(bl.euclidean_weights):
                    hall_e, _ = train_euclidean_hallucination(
                        teacher, train, epochs=epochs, class_weight=w,
                        batch_size=tr.batch_size, lr=tr.lr, seed=tr.seed,
                        val_fraction=tr.val_fraction, log_sink=tagged,
                    )
                    arts.append(ctx.save_encoder(
                        f"euclidean_w{i}.npz", hall_e, role="euclidean",
                        class_weight=w))
    finally:
        sink.close()
    return arts


def _stage_eval(ctx):
    cfg = ctx.cfg
    test = ctx.split("test")
    bs = cfg.evaluation.batch_size
    enc_a, _ = load_encoder(ctx.model_path("step1_a.npz"))
    teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
    hall, _ = load_encoder(ctx.model_path("hallucination.npz"))
    disc, _ = load_discriminator(ctx.model_path("discriminator.npz"))

    rows = []

    def add(model, family, acc, per_class=None, **extra):
        row = {"model": model, "family": family, "acc": float(acc)}
        if per_class is not None:
            row["per_class"] = per_class
        if extra:
            row["extra"] = extra
        rows.append(row)

    rep = evaluate(
        [("stream-a", enc_a, "a"), ("stream-b", teacher, "b")], test,
        batch_size=bs)
    add("stream-a", "stream", rep.accuracies["stream-a"],
        rep.per_class["stream-a"])
    add("stream-b", "stream", rep.accuracies["stream-b"],
        rep.per_class["stream-b"])
    add("two-stream", "fused", rep.fused_acc)

    rep = evaluate(
        [("stream-a", enc_a, "a"), ("hallucination", hall, "a")], test,
        batch_size=bs)
    add("hallucination", "distilled", rep.accuracies["hallucination"],
        rep.per_class["hallucination"])
    add("hallucination-fused", "distilled", rep.fused_acc)
    p_fake_clean = discriminator_fake_probability(
        disc, teacher, test.b_encoded(), bs)

    members = sorted(glob.glob(ctx.model_path("ensemble_*.npz")))
    if members:
        streams = [(f"member{k}", load_encoder(p)[0], "a")
                   for k, p in enumerate(members)]
        rep = evaluate(streams, test, batch_size=bs)
        add("rgb-ensemble", "baseline", rep.fused_acc)

    for prefix in ("moddrop", "plain"):
        pa, pb = (ctx.model_path(f"{prefix}_a.npz"),
                  ctx.model_path(f"{prefix}_b.npz"))
        if not (os.path.exists(pa) and os.path.exists(pb)):
            continue
        ta, _ = load_encoder(pa)
        tb, _ = load_encoder(pb)
        streams = [("a", ta, "a"), ("b", tb, "b")]
        rep = evaluate(streams, test, batch_size=bs)
        add(f"{prefix}-finetune", "baseline", rep.fused_acc)
        blank = np.zeros_like(test.b_encoded())
        rep = evaluate(streams, test, b_tensor=blank, batch_size=bs)
        add(f"{prefix}-finetune-blank-b", "baseline", rep.fused_acc)

    ae_path = ctx.model_path("autoencoder.npz")
    if os.path.exists(ae_path):
        from .baselines import evaluate_autoencoder

        ae, _ = load_autoencoder(ae_path)
        res = evaluate_autoencoder(ae, enc_a, teacher, ctx.split("train"), test)
        add("autoencoder-fused", "baseline", res["fused_acc"],
            recon_b_acc=res["recon_b_acc"],
            train_recon_err=res["train_recon_err"],
            test_recon_err=res["test_recon_err"])

    naive_path = ctx.model_path("hall_naive.npz")
    if os.path.exists(naive_path):
        hall_n, _ = load_encoder(naive_path)
        disc_n, _ = load_discriminator(ctx.model_path("disc_naive.npz"))
        rep = evaluate([("naive", hall_n, "a")], test, batch_size=bs)
        add("naive-binary-hallucination", "baseline", rep.accuracies["naive"],
            realfake_acc=realfake_accuracy(
                disc_n, teacher, test.b_encoded(), hall_n, test.a, bs))

    for path in sorted(glob.glob(ctx.model_path("euclidean_w*.npz"))):
        hall_e, meta = load_encoder(path)
        w = meta["extra"]["class_weight"]
        rep = evaluate([("euclid", hall_e, "a")], test, batch_size=bs)
        add(f"euclidean-w{w:g}", "baseline", rep.accuracies["euclid"],
            class_weight=w)

    return [ctx.write_eval("main.json",
                           {"rows": rows, "p_fake_clean": p_fake_clean})]


def _stage_sweep(ctx):
    cfg, ev = ctx.cfg, ctx.cfg.evaluation
    test = ctx.split("test")
    enc_a, _ = load_encoder(ctx.model_path("step1_a.npz"))
    teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
    hall, _ = load_encoder(ctx.model_path("hallucination.npz"))
    disc, _ = load_discriminator(ctx.model_path("discriminator.npz"))
    result = noise_sweep(
        enc_a, teacher, hall, disc, test,
        variances=ev.sweep_variances, seed=cfg.training.seed,
        include_void=ev.include_void, threshold=ev.switch_threshold,
        margin=ev.switch_margin,
    )
    doc = result.to_dict()
    doc.update(threshold=ev.switch_threshold, margin=ev.switch_margin)
    return [ctx.write_eval("sweep.json", doc)]


def _stage_ablate(ctx, suites=None):
    cfg = ctx.cfg
    train, test = ctx.split("train"), ctx.split("test")
    teacher = None
    if os.path.exists(ctx.model_path("step1_b.npz")):
        teacher, _ = load_encoder(ctx.model_path("step1_b.npz"))
    sink = _JsonlLog(ctx.path("logs", "ablate.jsonl"))
    arts = []
    try:
        for suite in (cfg.evaluation.ablation_suites if suites is None
                      else suites):
            table = run_ablation(
                suite, cfg, train, test, teacher=teacher, log_sink=sink)
            arts.append(ctx.write_eval(f"ablate_{suite}.json", table))
    finally:
        sink.close()
    return arts


def _stage_report(ctx):
    out = emit_report(ctx.run_dir, plot=True)
    rel = lambda p: os.path.relpath(p, ctx.run_dir)
    return ([{"path": rel(out["report"])}]
            + [{"path": rel(p)} for p in out["plots"]])


_STAGE_FUNCS = {
    "data": _stage_data,
    "step1": _stage_step1,
    "step2": _stage_step2,
    "baselines": _stage_baselines,
    "eval": _stage_eval,
    "sweep": _stage_sweep,
    "ablate": _stage_ablate,
    "report": _stage_report,
}


def _load_manifest(path):
    if os.path.exists(path):
        with open(path) as f:
            return json.load(f)
    return {"stages": {}}


def run_stage_subset(cfg, stage, subset):
    """Run part of the baselines or ablate stage in place.

    Artifacts land in the run directory but the stage is NOT marked done
    (a later full run completes the remainder). Dependencies must already
    be satisfied.
    """
    if stage not in ("baselines", "ablate"):
        raise ConfigError([f"stage {stage!r} has no subset form"])
    ctx = PipelineContext(cfg)
    for dep in _DEPS[stage]:
        if not ctx.done(dep):
            raise DependencyError(
                f"stage '{stage}' requires completed stage '{dep}'")
    for sub in ("logs", "models", "eval"):
        os.makedirs(ctx.path(sub), exist_ok=True)
    if stage == "baselines":
        return _stage_baselines(ctx, kinds=subset)
    return _stage_ablate(ctx, suites=subset)


def run_pipeline(cfg, stages=None):
    """Execute the requested stages (default: all) for one config.

    Returns {"run_dir", "config_hash", "executed", "manifest"}. Completed
    stages are skipped; a requested stage whose prerequisite is neither
    completed nor requested raises DependencyError.
    """
    if stages is None:
        requested = list(STAGES)
    else:
        requested = list(dict.fromkeys(stages))
        unknown = [s for s in requested if s not in STAGES]
        if unknown:
            raise ConfigError(
                [f"unknown stage {s!r} (choose from {', '.join(STAGES)})"
                 for s in unknown])
        requested.sort(key=STAGES.index)

    ctx = PipelineContext(cfg)
    for sub in ("stages", "logs", "data", "models", "eval"):
        os.makedirs(ctx.path(sub), exist_ok=True)

    cfg_path = ctx.path("config.yaml")
    text = serialize_config(cfg)
    if os.path.exists(cfg_path):
        # hash comparison, not bytes: output.dir may differ between the
        # stored copy and a rerun that reached this dir via the env root
        if config_hash(parse_config(cfg_path)) != config_hash(cfg):
            raise ConfigError(
                [f"{cfg_path} does not match the supplied config "
                 f"(corrupted run directory?)"])
    else:
        with open(cfg_path, "w") as f:
            f.write(text)

    for s in requested:
        for dep in _DEPS[s]:
            if not ctx.done(dep) and dep not in requested:
                raise DependencyError(
                    f"stage '{s}' requires completed stage '{dep}'")

    manifest_path = ctx.path("manifest.json")
    manifest = _load_manifest(manifest_path)
    manifest["config_hash"] = ctx.chash
    executed = []
    for s in requested:
        if ctx.done(s):
            continue
        for dep in _DEPS[s]:
            if not ctx.done(dep):
                raise DependencyError(
                    f"stage '{s}' requires completed stage '{dep}'")
        artifacts = _STAGE_FUNCS[s](ctx)
        manifest["stages"][s] = {"artifacts": artifacts}
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        ctx.mark_done(s)
        executed.append(s)
    return {"run_dir": ctx.run_dir, "config_hash": ctx.chash,
            "executed": executed, "manifest": manifest}
