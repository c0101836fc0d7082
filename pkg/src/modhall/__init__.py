"""Adversarial modality distillation at desk scale.

Trains a hallucination network that maps the test-time modality into the
feature space of a privileged training-time modality through an
extended-label adversarial game, plus the baselines and evaluation
machinery needed to compare the approaches on a controlled synthetic task.
"""

__version__ = "0.1.0"
