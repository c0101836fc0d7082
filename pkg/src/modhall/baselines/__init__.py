from .ensemble import train_rgb_ensemble
from .moddrop import train_two_stream_finetune
from .autoencoder import (
    CrossModalAutoencoder, train_autoencoder_baseline, evaluate_autoencoder,
    save_autoencoder, load_autoencoder,
)
from .naive_gan import train_naive_binary_gan
from .euclidean import train_euclidean_hallucination

BASELINE_KINDS = (
    "rgb-ensemble", "moddrop", "cross-modal-autoencoder",
    "naive-binary-gan", "euclidean-hallucination",
)

__all__ = [
    "train_rgb_ensemble", "train_two_stream_finetune",
    "CrossModalAutoencoder", "train_autoencoder_baseline", "evaluate_autoencoder",
    "save_autoencoder", "load_autoencoder",
    "train_naive_binary_gan", "train_euclidean_hallucination",
    "BASELINE_KINDS",
]
