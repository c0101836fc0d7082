"""Declarative experiment configuration.

One YAML file describes a full run: dataset, model, training, baselines,
evaluation, output. Parsing validates everything and reports ALL problems
at once, each naming its section and key. A config hashes to a stable
sha256 over its canonical JSON form; artifacts are filed under that hash
so any result traces back to exactly one configuration.

Every random draw in a run flows from training.seed through named
substreams, so one root seed pins the whole experiment.
"""

import dataclasses
from dataclasses import dataclass, field
import hashlib
import json

import yaml

from .baselines import BASELINE_KINDS
from .data.synthetic import SyntheticTaskSpec
from .errors import ConfigError
from .models.discriminator import DiscConfig
from .models.encoder import BOTTLENECK_VARIANTS, EncoderConfig
from .training.step2 import Step2Config

CONFIG_VERSION = 1

DATASET_KINDS = ("synthetic", "directory")

# defined here, not in the evaluation package, so the ablation runner can
# import config bridges without a cycle
ABLATION_SUITES = ("bottleneck-size", "bottleneck-variant", "discriminator-task")


@dataclass(frozen=True)
class DatasetSection:
    kind: str = "synthetic"
    num_classes: int = 4
    samples_per_class: int = 200
    image_size: int = 32
    frames_per_clip: int = 5
    modality_a_informativeness: float = 0.5
    modality_b_informativeness: float = 0.5
    overlap: float = 0.35
    root: str = None  # directory datasets only


@dataclass(frozen=True)
class ModelSection:
    widths: tuple = (32, 64, 128)
    bottleneck: str = "pool+conv"
    d: int = 128
    discriminator: str = "shallow"
    width_scale: float = 0.125
    use_frame_onehot: bool = True


@dataclass(frozen=True)
class TrainingSection:
    seed: int = 0
    batch_size: int = 32
    lr: float = 1e-4
    lr_d: float = 1e-4
    step1_epochs: int = 8
    step2_epochs: int = 8
    d_steps: int = 1
    g_steps: int = 1
    generator_target: str = "flip"
    game_classes: int = None  # None: one game class per dataset class
    val_fraction: float = 0.1


@dataclass(frozen=True)
class BaselinesSection:
    kinds: tuple = BASELINE_KINDS
    ensemble_members: int = 2
    moddrop_prob: float = 0.2
    finetune_epochs: int = 4
    autoencoder_epochs: int = 8
    euclidean_weights: tuple = (0.1, 1.0, 10.0)
    euclidean_epochs: int = None  # None: training.step2_epochs


@dataclass(frozen=True)
class EvaluationSection:
    sweep_variances: tuple = (0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
    include_void: bool = True
    switch_threshold: float = 0.5
    switch_margin: float = 0.1
    batch_size: int = 64
    ablation_suites: tuple = ABLATION_SUITES


@dataclass(frozen=True)
class OutputSection:
    dir: str = "runs"


@dataclass(frozen=True)
class ExperimentConfig:
    version: int = CONFIG_VERSION
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    baselines: BaselinesSection = field(default_factory=BaselinesSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self):
        d = dataclasses.asdict(self)
        for sec in d.values():
            if isinstance(sec, dict):
                for k, v in sec.items():
                    if isinstance(v, tuple):
                        sec[k] = list(v)
        return d


_SECTIONS = {
    "dataset": DatasetSection,
    "model": ModelSection,
    "training": TrainingSection,
    "baselines": BaselinesSection,
    "evaluation": EvaluationSection,
    "output": OutputSection,
}

# keys whose YAML lists become tuples (dataclass equality + hashing)
_TUPLE_KEYS = {"widths", "kinds", "euclidean_weights", "sweep_variances",
               "ablation_suites"}


def _build_section(name, cls, raw, errors):
    kwargs = {}
    fields = {f.name for f in dataclasses.fields(cls)}
    for key, value in raw.items():
        if key not in fields:
            errors.append(f"unknown key '{key}' in section '{name}'")
            continue
        if key in _TUPLE_KEYS:
            if not isinstance(value, (list, tuple)):
                errors.append(f"{name}.{key}: expected a list")
                continue
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        errors.append(f"section '{name}': {e}")
        return cls()


def config_from_dict(raw):
    """Build a validated ExperimentConfig; raises ConfigError listing
    every problem found, not just the first."""
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping of sections"])
    errors = []
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        errors.append(
            f"unsupported config version {version!r} (expected {CONFIG_VERSION})"
        )
    sections = {}
    for name, value in raw.items():
        if name == "version":
            continue
        if name not in _SECTIONS:
            errors.append(f"unknown section '{name}'")
            continue
        if not isinstance(value, dict):
            errors.append(f"section '{name}' must be a mapping")
            continue
        sections[name] = _build_section(name, _SECTIONS[name], value, errors)
    for name, cls in _SECTIONS.items():
        sections.setdefault(name, cls())
    cfg = ExperimentConfig(version=CONFIG_VERSION, **sections)
    errors.extend(validate_config(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def _check_synthetic(ds, errors):
    try:
        synthetic_spec(ds, seed=0).validate()
    except ConfigError as e:
        errors.extend(f"dataset: {msg}" for msg in e.errors)


def validate_config(cfg):
    """Return a list of human-readable problems (empty when valid)."""
    errors = []
    ds, m, tr, bl, ev = (
        cfg.dataset, cfg.model, cfg.training, cfg.baselines, cfg.evaluation
    )

    if ds.kind not in DATASET_KINDS:
        errors.append(
            f"dataset.kind must be one of {DATASET_KINDS}, got {ds.kind!r}"
        )
    elif ds.kind == "synthetic":
        _check_synthetic(ds, errors)
    elif ds.root is None:
        errors.append("dataset.root is required when dataset.kind is 'directory'")

    try:
        EncoderConfig(
            num_classes=max(int(ds.num_classes), 1),
            frames=max(int(ds.frames_per_clip), 1),
            image_size=ds.image_size, widths=m.widths,
            bottleneck=m.bottleneck, d=m.d,
        ).validate()
    except ConfigError as e:
        errors.extend(f"model: {msg}" for msg in e.errors)
    try:
        DiscConfig(
            feat_dim=max(int(m.d), 1), frames=max(int(ds.frames_per_clip), 1),
            game_classes=max(int(ds.num_classes), 1),
            variant=m.discriminator, width_scale=m.width_scale,
            use_frame_onehot=m.use_frame_onehot,
        ).validate()
    except ConfigError as e:
        errors.extend(f"model: {msg}" for msg in e.errors)

    if tr.batch_size < 1:
        errors.append("training.batch_size must be >= 1")
    if tr.lr <= 0 or tr.lr_d <= 0:
        errors.append("training learning rates must be positive")
    if tr.step1_epochs < 0 or tr.step2_epochs < 0:
        errors.append("training epoch counts must be >= 0")
    if tr.d_steps < 1 or tr.g_steps < 1:
        errors.append("training.d_steps and training.g_steps must be >= 1")
    if tr.generator_target not in ("flip", "ascend"):
        errors.append(
            f"training.generator_target must be 'flip' or 'ascend', "
            f"got {tr.generator_target!r}"
        )
    if tr.game_classes is not None and tr.game_classes < 1:
        errors.append("training.game_classes must be >= 1 when set")
    if not 0.0 < tr.val_fraction < 1.0:
        errors.append("training.val_fraction must be in (0, 1)")

    for kind in bl.kinds:
        if kind not in BASELINE_KINDS:
            errors.append(f"baselines.kinds: unknown kind {kind!r}")
    if bl.ensemble_members < 2:
        errors.append("baselines.ensemble_members must be >= 2")
    if not 0.0 <= bl.moddrop_prob < 1.0:
        errors.append("baselines.moddrop_prob must be in [0, 1)")
    if not bl.euclidean_weights or any(w <= 0 for w in bl.euclidean_weights):
        errors.append("baselines.euclidean_weights must all be positive")

    v = ev.sweep_variances
    if not v or v[0] != 0.0:
        errors.append("evaluation.sweep_variances must start at 0")
    if any(b <= a for a, b in zip(v, v[1:])):
        errors.append("evaluation.sweep_variances must be strictly increasing")
    if not 0.0 < ev.switch_threshold < 1.0:
        errors.append("evaluation.switch_threshold must be in (0, 1)")
    if ev.switch_margin < 0:
        errors.append("evaluation.switch_margin must be >= 0")
    for suite in ev.ablation_suites:
        if suite not in ABLATION_SUITES:
            errors.append(f"evaluation.ablation_suites: unknown suite {suite!r}")
    return errors


def parse_config(path):
    try:
        with open(path) as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([f"cannot read config: {e}"])
    except yaml.YAMLError as e:
        raise ConfigError([f"config is not valid YAML: {e}"])
    return config_from_dict(raw if raw is not None else {})


def serialize_config(cfg):
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def config_hash(cfg):
    """Stable hex digest of the canonical config encoding.

    The output section is excluded: the hash identifies the experiment,
    not where its artifacts happen to land, so the same config written
    under two roots keeps one run-directory name.
    """
    doc = cfg.to_dict()
    doc.pop("output", None)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# --- bridges to the component configs ---

def synthetic_spec(ds, seed):
    return SyntheticTaskSpec(
        num_classes=ds.num_classes, samples_per_class=ds.samples_per_class,
        image_size=ds.image_size, frames_per_clip=ds.frames_per_clip,
        modality_a_informativeness=ds.modality_a_informativeness,
        modality_b_informativeness=ds.modality_b_informativeness,
        overlap=ds.overlap, seed=seed,
    )


def encoder_config(cfg, num_classes=None):
    return EncoderConfig(
        num_classes=cfg.dataset.num_classes if num_classes is None else num_classes,
        frames=cfg.dataset.frames_per_clip,
        image_size=cfg.dataset.image_size,
        widths=cfg.model.widths,
        bottleneck=cfg.model.bottleneck,
        d=cfg.model.d,
    )


def step2_config(cfg):
    tr, m = cfg.training, cfg.model
    return Step2Config(
        epochs=tr.step2_epochs, batch_size=tr.batch_size,
        lr_g=tr.lr, lr_d=tr.lr_d, seed=tr.seed,
        val_fraction=tr.val_fraction,
        disc_variant=m.discriminator, width_scale=m.width_scale,
        game_classes=tr.game_classes, use_frame_onehot=m.use_frame_onehot,
        generator_target=tr.generator_target,
        d_steps=tr.d_steps, g_steps=tr.g_steps,
    )
