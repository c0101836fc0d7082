"""Hallucination trained against a plain real/fake discriminator.

Identical machinery to the class-conditioned adversarial step except the
discriminator head has two outputs and the targets carry no class
identity: generated features aim for [1, 0], genuine depth features for
[0, 1]. Kept as a thin wrapper so the two arms differ only in head size
and target labels.
"""

import dataclasses

from ..training.step2 import train_step2


def train_naive_binary_gan(teacher, dataset, cfg, *, a_encoder=None,
                           workdir=None, log_sink=None):
    """Run the adversarial step with a degenerate single-class game."""
    binary_cfg = dataclasses.replace(cfg, game_classes=1)
    return train_step2(
        teacher, dataset, binary_cfg,
        a_encoder=a_encoder, workdir=workdir, log_sink=log_sink,
    )
