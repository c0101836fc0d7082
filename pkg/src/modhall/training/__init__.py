from .labels import extend_label, extended_label_batch
from .fusion import fuse_logits
from .step1 import fit_stream, train_step1
from .step2 import (
    Step2Config, AdversarialState, adversarial_step, train_step2,
    init_hallucination_from_teacher, build_game_discriminator,
    discriminator_game_loss, generator_game_loss,
)

__all__ = [
    "extend_label", "extended_label_batch", "fuse_logits",
    "fit_stream", "train_step1",
    "Step2Config", "AdversarialState", "adversarial_step", "train_step2",
    "init_hallucination_from_teacher", "build_game_discriminator",
    "discriminator_game_loss", "generator_game_loss",
]
