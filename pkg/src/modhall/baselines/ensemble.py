"""Same-modality ensemble: the control experiment for hallucination.

Two modality-A streams trained from different initializations, fused the
same way as a two-stream model. Whatever gain this achieves is the
"free lunch" of ensembling; the hallucination stream has to beat it to
demonstrate it actually transfers privileged information.
"""

from ..models.encoder import build_encoder
from ..rng import substream
from ..training.step1 import train_step1


def train_rgb_ensemble(dataset, enc_cfg, *, epochs, batch_size=32, lr=1e-4,
                       seed=0, n_members=2, val_fraction=0.1, log_sink=None):
    """Independently seeded Step-1 runs on modality A; returns (members, logs)."""
    members, logs = [], []
    for k in range(n_members):
        enc = build_encoder(enc_cfg, rng=substream(seed, "ensemble-init", k))
        member_seed = int(substream(seed, "ensemble-train", k).integers(2**31))
        sink = None
        if log_sink is not None:
            sink = lambda rec, _k=k: log_sink({**rec, "member": _k})
        enc, log = train_step1(
            enc, dataset, "a", epochs=epochs, batch_size=batch_size, lr=lr,
            seed=member_seed, val_fraction=val_fraction, log_sink=sink,
        )
        members.append(enc)
        logs.append(log)
    return members, logs
