"""Versioned model checkpoints: architecture descriptor + named tensors.

A checkpoint is an .npz holding one JSON metadata entry (kind, format
version, full architecture config, optional run metadata such as the
producing config hash) plus one array per named parameter. Loading
rebuilds the architecture from the descriptor and fills the tensors;
any mismatch in names, shapes, or version is a hard error.
"""

import hashlib
import json

import numpy as np

from ..errors import CheckpointError
from .discriminator import DiscConfig, build_discriminator
from .encoder import EncoderConfig, build_encoder

_CKPT_VERSION = 1


def params_hash(model):
    """sha256 over parameter names and raw bytes, in named order."""
    h = hashlib.sha256()
    for name, p in model.named_params():
        h.update(name.encode())
        h.update(str(p.value.shape).encode())
        h.update(np.ascontiguousarray(p.value).tobytes())
    return h.hexdigest()


def copy_params(src, dst):
    """Copy parameters between identically structured models."""
    sp, dp = src.named_params(), dst.named_params()
    if [n for n, _ in sp] != [n for n, _ in dp]:
        raise CheckpointError("parameter name sets differ between models")
    for (_, a), (name, b) in zip(sp, dp):
        if a.value.shape != b.value.shape:
            raise CheckpointError(
                f"shape mismatch for '{name}': {a.value.shape} vs {b.value.shape}"
            )
        b.value[...] = a.value
    return dst


def write_checkpoint(path, kind, arch, model, extra=None):
    meta = {
        "ckpt_version": _CKPT_VERSION,
        "kind": kind,
        "arch": arch,
        "extra": extra or {},
    }
    arrays = {"p/" + name: p.value for name, p in model.named_params()}
    np.savez(path, __meta__=np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8
    ), **arrays)


def read_checkpoint(path, expect_kind):
    try:
        z = np.load(path)
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    if "__meta__" not in z:
        raise CheckpointError(f"{path} is not a model checkpoint")
    meta = json.loads(bytes(z["__meta__"]).decode())
    if meta.get("ckpt_version") != _CKPT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {meta.get('ckpt_version')} "
            f"unsupported (expected {_CKPT_VERSION})"
        )
    if meta["kind"] != expect_kind:
        raise CheckpointError(
            f"{path}: expected a {expect_kind} checkpoint, found {meta['kind']}"
        )
    params = {k[2:]: z[k] for k in z.files if k.startswith("p/")}
    return meta, params


def fill_params(model, params, path):
    names = [n for n, _ in model.named_params()]
    missing = set(names) - set(params)
    surplus = set(params) - set(names)
    if missing or surplus:
        raise CheckpointError(
            f"{path}: parameter names do not match architecture "
            f"(missing {sorted(missing)}, unexpected {sorted(surplus)})"
        )
    for name, p in model.named_params():
        arr = params[name]
        if arr.shape != p.value.shape:
            raise CheckpointError(
                f"{path}: shape mismatch for '{name}': "
                f"checkpoint {arr.shape} vs model {p.value.shape}"
            )
        p.value[...] = arr
    return model


def save_encoder(path, encoder, extra=None):
    write_checkpoint(path, "encoder", encoder.cfg.to_dict(), encoder, extra)


def load_encoder(path, expect_cfg=None):
    meta, params = read_checkpoint(path, "encoder")
    cfg = EncoderConfig.from_dict(meta["arch"])
    if expect_cfg is not None and cfg != expect_cfg:
        raise CheckpointError(
            f"{path}: architecture mismatch: checkpoint {cfg} vs expected {expect_cfg}"
        )
    enc = build_encoder(cfg)
    return fill_params(enc, params, path), meta


def save_discriminator(path, disc, extra=None):
    write_checkpoint(path, "discriminator", disc.cfg.to_dict(), disc, extra)


def load_discriminator(path, expect_cfg=None):
    meta, params = read_checkpoint(path, "discriminator")
    cfg = DiscConfig.from_dict(meta["arch"])
    if expect_cfg is not None and cfg != expect_cfg:
        raise CheckpointError(
            f"{path}: architecture mismatch: checkpoint {cfg} vs expected {expect_cfg}"
        )
    disc = build_discriminator(cfg)
    return fill_params(disc, params, path), meta
