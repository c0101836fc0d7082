"""Extended (C+1)-way labels for the adversarial game.

Teacher (real, privileged-modality) features keep their class identity
with the fake slot at zero: [y_i || 0]. Hallucinated features get the
dedicated fake slot: [zeros(C) || 1]. With game_classes=1 this degrades
to plain real/fake labels [1,0] / [0,1] and no class information enters
the game.
"""

import numpy as np

from ..errors import LabelError

SOURCES = ("teacher", "hallucinated")


def extend_label(class_index, source, num_classes, dtype=np.float32):
    if source not in SOURCES:
        raise LabelError(f"unknown source '{source}' (choose from {SOURCES})")
    if not 0 <= class_index < num_classes:
        raise LabelError(
            f"class index {class_index} out of range [0, {num_classes})"
        )
    v = np.zeros(num_classes + 1, dtype=dtype)
    if source == "teacher":
        v[class_index] = 1.0
    else:
        v[num_classes] = 1.0
    return v


def extended_label_batch(class_indices, source, num_classes, dtype=np.float32):
    """[N] class indices -> [N, C+1] extended labels.

    With num_classes=1 every row collapses to the binary real/fake label
    regardless of the true class.
    """
    if source not in SOURCES:
        raise LabelError(f"unknown source '{source}' (choose from {SOURCES})")
    idx = np.asarray(class_indices)
    n = idx.shape[0]
    out = np.zeros((n, num_classes + 1), dtype=dtype)
    if source == "hallucinated":
        out[:, num_classes] = 1.0
    elif num_classes == 1:
        out[:, 0] = 1.0
    else:
        if idx.size and (idx.min() < 0 or idx.max() >= num_classes):
            raise LabelError(
                f"class indices out of range [0, {num_classes})"
            )
        out[np.arange(n), idx] = 1.0
    return out
