"""Small exact datasets used in tests, docs and CLI demos."""

import numpy as np

from .types import LabeledDataset

# Three-class toy model: six equally likely predictions and the true
# outcome distribution given each.  Confidence-calibrated and marginally
# calibrated, yet not calibrated.
TOY_PREDICTIONS = (
    (0.1, 0.3, 0.6),
    (0.1, 0.6, 0.3),
    (0.3, 0.1, 0.6),
    (0.3, 0.6, 0.1),
    (0.6, 0.1, 0.3),
    (0.6, 0.3, 0.1),
)
TOY_CONDITIONALS = (
    (0.2, 0.2, 0.6),
    (0.0, 0.7, 0.3),
    (0.2, 0.2, 0.6),
    (0.4, 0.5, 0.1),
    (0.7, 0.0, 0.3),
    (0.5, 0.4, 0.1),
)


def toy_dataset(repeats: int = 10) -> LabeledDataset:
    """Each toy prediction ``repeats`` times with labels in exactly the
    conditional proportions (``repeats`` must make them whole numbers)."""
    preds, labels = [], []
    for mu, cond in zip(TOY_PREDICTIONS, TOY_CONDITIONALS):
        counts = [round(c * repeats) for c in cond]
        if sum(counts) != repeats or any(abs(k - c * repeats) > 1e-9 for k, c in zip(counts, cond)):
            raise ValueError(f"repeats={repeats} does not give whole label counts")
        for y, k in enumerate(counts):
            preds += [mu] * k
            labels += [y] * k
    return LabeledDataset.from_rows(np.array(preds), np.array(labels))
