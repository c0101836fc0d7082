"""Cross-modal autoencoder: hallucinate modality-B images, not features.

An A-modality trunk encodes each frame to the final feature map; a
decoder of stacked upsample+conv+batchnorm blocks reconstructs the
jet-encoded B frame under squared error. At test time reconstructions
feed the frozen B stream and its logits fuse with the A stream. The known
failure mode (and the reason feature-level hallucination wins) is that
pixel reconstruction overfits the training set.
"""

import numpy as np

from .. import nn
from ..errors import TrainingError
from ..losses import mse
from ..models.checkpoint import fill_params, read_checkpoint, write_checkpoint
from ..models.encoder import EncoderConfig, build_trunk
from ..optim import Adam
from ..rng import substream
from ..training.common import (
    accuracy, predict_logits, restore_params, snapshot_params, train_val_split,
)
from ..training.fusion import fuse_logits


def _build_decoder(widths, n_blocks, rng, dtype=np.float32):
    w3, w2, w1 = widths[2], widths[1], widths[0]
    chain = [w3, w2, w1] + [w1] * max(0, n_blocks - 3)
    layers = []
    for k in range(n_blocks):
        cin, cout = chain[k], chain[min(k + 1, len(chain) - 1)]
        layers += [
            nn.UpsampleNearest2x(),
            nn.Conv2d(cin, cout, 3, pad=1, rng=rng, dtype=dtype),
            nn.BatchNorm2d(cout, dtype=dtype),
            nn.ReLU(),
        ]
    layers.append(nn.Conv2d(chain[min(n_blocks, len(chain) - 1)], 3, 1, rng=rng, dtype=dtype))
    return nn.Sequential(layers)


class CrossModalAutoencoder:
    """Per-frame A -> B-image translator; folds time into the batch axis."""

    def __init__(self, enc_cfg, n_blocks=3, rng=None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(0)
        # trunk downsamples 8x; each decoder block upsamples 2x
        if n_blocks < 3:
            raise ValueError("decoder needs at least 3 upsampling blocks")
        self.cfg = enc_cfg
        self.n_blocks = n_blocks
        self.trunk = build_trunk(enc_cfg, rng, dtype)
        self.decoder = _build_decoder(enc_cfg.widths, n_blocks, rng, dtype)
        self._children = [("trunk", self.trunk), ("decoder", self.decoder)]

    named_params = nn.Layer.named_params
    params = nn.Layer.params
    zero_grads = nn.Layer.zero_grads

    def forward(self, clips, train=True):
        """[B, T, H, W, 3] modality A -> [B, T, H', W', 3] reconstruction."""
        b, t = clips.shape[:2]
        x = clips.reshape(b * t, *clips.shape[2:])
        fmap = self.trunk.forward(x, train=train)
        recon = self.decoder.forward(fmap, train=train)
        self._bt = (b, t)
        return recon.reshape(b, t, *recon.shape[1:])

    def backward(self, grecon):
        b, t = self._bt
        g = grecon.reshape(b * t, *grecon.shape[2:])
        return self.trunk.backward(self.decoder.backward(g))

    def reconstruct(self, clips, batch_size=32):
        outs = []
        for start in range(0, clips.shape[0], batch_size):
            outs.append(self.forward(clips[start : start + batch_size], train=False))
        return np.concatenate(outs, axis=0)


def save_autoencoder(path, ae, extra=None):
    arch = {"encoder": ae.cfg.to_dict(), "n_blocks": ae.n_blocks}
    write_checkpoint(path, "autoencoder", arch, ae, extra)


def load_autoencoder(path):
    meta, params = read_checkpoint(path, "autoencoder")
    cfg = EncoderConfig.from_dict(meta["arch"]["encoder"])
    ae = CrossModalAutoencoder(cfg, n_blocks=meta["arch"]["n_blocks"])
    return fill_params(ae, params, path), meta


def train_autoencoder_baseline(dataset, enc_cfg, *, epochs, n_blocks=3,
                               batch_size=32, lr=1e-4, seed=0,
                               val_fraction=0.1, log_sink=None):
    """Train A -> jet(B) reconstruction; returns (autoencoder, log)."""
    ae = CrossModalAutoencoder(
        enc_cfg, n_blocks=n_blocks, rng=substream(seed, "ae-init")
    )
    x_a, targets = dataset.a, dataset.b_encoded()
    train_idx, val_idx = train_val_split(len(dataset), val_fraction)
    opt = Adam(ae.params(), lr=lr)
    log = []
    best = (np.inf, snapshot_params(ae))
    for epoch in range(epochs):
        order = substream(seed, "ae", epoch).permutation(train_idx)
        losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            recon = ae.forward(x_a[idx], train=True)
            loss, dr = mse(recon, targets[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"reconstruction loss non-finite at epoch {epoch}")
            opt.zero_grads()
            ae.backward(dr)
            opt.step()
            losses.append(loss)
        val_recon = ae.reconstruct(x_a[val_idx])
        val_err = float(((val_recon - targets[val_idx]) ** 2).mean())
        rec = {"stage": "autoencoder", "epoch": epoch,
               "train_recon_err": float(np.mean(losses)), "val_recon_err": val_err}
        log.append(rec)
        if log_sink is not None:
            log_sink(rec)
        if val_err <= best[0]:
            best = (val_err, snapshot_params(ae))
    if epochs > 0:
        restore_params(ae, best[1])
    return ae, log


def evaluate_autoencoder(ae, a_encoder, b_encoder, train_ds, test_ds):
    """Downstream accuracy of reconstructed B through the frozen B stream.

    Returns a dict with the B-via-reconstruction accuracy, its fusion with
    the A stream, and train/test reconstruction errors (the overfit gap).
    """
    recon_test = ae.reconstruct(test_ds.a)
    test_err = float(((recon_test - test_ds.b_encoded()) ** 2).mean())
    recon_train = ae.reconstruct(train_ds.a)
    train_err = float(((recon_train - train_ds.b_encoded()) ** 2).mean())

    labels = test_ds.labels
    b_logits = predict_logits(b_encoder, recon_test)
    a_logits = predict_logits(a_encoder, test_ds.a)
    return {
        "recon_b_acc": accuracy(b_logits, labels),
        "fused_acc": accuracy(fuse_logits(a_logits, b_logits), labels),
        "train_recon_err": train_err,
        "test_recon_err": test_err,
    }
