"""Dataset persistence, directory ingestion, and batch assembly.

On-disk layout per split:

    <root>/<split>/manifest.jsonl   one record per sample: id, class, paths
    <root>/<split>/a/<id>.npy       modality A clip [T, H, W, 3]
    <root>/<split>/b/<id>.npy       modality B raw map [T, H, W]
    <root>/meta.json                num_classes, frames, generator echo

Real-data ingestion is a generic directory-of-frames loader: the manifest
points at one directory per clip per modality and frames are files sorted
by name; NTU/NYUD-specific parsing is deliberately out of scope.
"""

from dataclasses import dataclass
import json
import os

import numpy as np

from ..errors import DataError
from .sampling import sample_frames
from .synthetic import SyntheticDataset

_FORMAT_VERSION = 1


@dataclass
class ClipBatch:
    modality_a: np.ndarray          # [B, T, H, W, 3]
    modality_b: np.ndarray          # [B, T, H, W, 3]
    class_label: np.ndarray         # [B] int64
    frame_index_onehot: np.ndarray  # [B, T, T], row t one-hot of t

    def __len__(self):
        return self.modality_a.shape[0]


def frame_onehot(batch, t, dtype=np.float32):
    eye = np.eye(t, dtype=dtype)
    return np.broadcast_to(eye, (batch, t, t)).copy()


def iter_batches(ds, batch_size, rng=None, b_encoded=None):
    """Yield ClipBatch views over a dataset split.

    rng shuffles the order (pass a substream for reproducibility); None
    keeps dataset order. b_encoded overrides the cached clean jet encoding
    (noise sweeps pass a corrupted tensor).
    """
    n = len(ds)
    order = rng.permutation(n) if rng is not None else np.arange(n)
    b_all = ds.b_encoded() if b_encoded is None else b_encoded
    t = ds.frames
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        yield ClipBatch(
            modality_a=ds.a[idx],
            modality_b=b_all[idx],
            class_label=ds.labels[idx],
            frame_index_onehot=frame_onehot(len(idx), t),
        )


def save_dataset(splits, root):
    """Write {split_name: SyntheticDataset} under root."""
    os.makedirs(root, exist_ok=True)
    any_ds = next(iter(splits.values()))
    meta = {
        "format_version": _FORMAT_VERSION,
        "num_classes": int(any_ds.num_classes),
        "frames_per_clip": int(any_ds.frames),
        "image_size": int(any_ds.a.shape[2]),
        "splits": {name: len(ds) for name, ds in splits.items()},
    }
    if any_ds.spec is not None:
        meta["generator"] = {k: getattr(any_ds.spec, k) for k in (
            "num_classes", "samples_per_class", "image_size", "frames_per_clip",
            "modality_a_informativeness", "modality_b_informativeness",
            "overlap", "seed")}
    with open(os.path.join(root, "meta.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    for name, ds in splits.items():
        sdir = os.path.join(root, name)
        os.makedirs(os.path.join(sdir, "a"), exist_ok=True)
        os.makedirs(os.path.join(sdir, "b"), exist_ok=True)
        with open(os.path.join(sdir, "manifest.jsonl"), "w") as mf:
            for k in range(len(ds)):
                sid = f"{name}-{k:05d}"
                np.save(os.path.join(sdir, "a", sid + ".npy"), ds.a[k])
                np.save(os.path.join(sdir, "b", sid + ".npy"), ds.b_raw[k])
                rec = {"id": sid, "class": int(ds.labels[k]),
                       "a": f"a/{sid}.npy", "b": f"b/{sid}.npy"}
                mf.write(json.dumps(rec, sort_keys=True) + "\n")


def _read_manifest(path):
    if not os.path.exists(path):
        raise DataError(f"manifest not found: {path}")
    with open(path) as f:
        recs = [json.loads(line) for line in f if line.strip()]
    if not recs:
        raise DataError(f"manifest is empty: {path}")
    return recs


def load_dataset(root, split):
    """Load one saved split back into memory."""
    meta_path = os.path.join(root, "meta.json")
    if not os.path.exists(meta_path):
        raise DataError(f"dataset meta not found: {meta_path}")
    with open(meta_path) as f:
        meta = json.load(f)
    sdir = os.path.join(root, split)
    recs = _read_manifest(os.path.join(sdir, "manifest.jsonl"))
    a = np.stack([np.load(os.path.join(sdir, r["a"])) for r in recs])
    b = np.stack([np.load(os.path.join(sdir, r["b"])) for r in recs])
    labels = np.array([r["class"] for r in recs], dtype=np.int64)
    return SyntheticDataset(a, b, labels, int(meta["num_classes"]), split)


def _load_frame_dir(path):
    names = sorted(
        n for n in os.listdir(path)
        if n.endswith((".npy", ".png", ".jpg", ".jpeg"))
    )
    if not names:
        raise DataError(f"no frame files in {path}")
    frames = []
    for n in names:
        p = os.path.join(path, n)
        if n.endswith(".npy"):
            fr = np.load(p)
        else:
            import matplotlib.image as mpimg
            fr = mpimg.imread(p)
        fr = np.asarray(fr, dtype=np.float32)
        if fr.max() > 1.5:  # 8-bit files
            fr = fr / 255.0
        frames.append(fr)
    return np.stack(frames)


def load_directory_dataset(root, t, split="all"):
    """Ingest real paired clips: manifest rows with per-modality frame dirs.

    Each row: {"id", "class", "a_dir", "b_dir"}. Modality A frames must be
    [H, W, 3]; modality B frames are single-channel [H, W] raw maps.
    Clips are resampled to t frames.
    """
    recs = _read_manifest(os.path.join(root, "manifest.jsonl"))
    a_clips, b_clips, labels = [], [], []
    for r in recs:
        fa = sample_frames(_load_frame_dir(os.path.join(root, r["a_dir"])), t)
        fb = sample_frames(_load_frame_dir(os.path.join(root, r["b_dir"])), t)
        if fa.ndim != 4 or fa.shape[-1] != 3:
            raise DataError(f"clip {r['id']}: modality A frames must be [H,W,3]")
        if fb.ndim != 3:
            raise DataError(f"clip {r['id']}: modality B frames must be [H,W]")
        a_clips.append(fa)
        b_clips.append(fb)
        labels.append(int(r["class"]))
    meta_path = os.path.join(root, "meta.json")
    if os.path.exists(meta_path):
        with open(meta_path) as f:
            num_classes = int(json.load(f)["num_classes"])
    else:
        num_classes = max(labels) + 1
    return SyntheticDataset(
        np.stack(a_clips), np.stack(b_clips),
        np.array(labels, dtype=np.int64), num_classes, split,
    )
