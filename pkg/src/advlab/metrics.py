"""Evaluation metrics: the error-rate / confidence triple every report uses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    """Error rate plus mean argmax-class confidence, split by correctness.

    ``mean_confidence_on_errors`` is None exactly when no example was
    misclassified (the average confidence on a mistake is undefined at zero
    error); symmetrically for ``mean_confidence_on_correct`` at 100% error.
    """

    error_rate: float
    mean_confidence_on_errors: float | None
    mean_confidence_on_correct: float | None
    n: int

    def to_dict(self) -> dict:
        return {
            "error_rate": self.error_rate,
            "mean_confidence_on_errors": self.mean_confidence_on_errors,
            "mean_confidence_on_correct": self.mean_confidence_on_correct,
            "n": self.n,
        }


def metrics_from_predictions(
    predicted: np.ndarray, confidence: np.ndarray, labels: np.ndarray
) -> Metrics:
    """Aggregate per-example argmax predictions and confidences into Metrics."""
    wrong = predicted != labels
    n = int(labels.shape[0])
    n_wrong = int(wrong.sum())
    conf_err = float(confidence[wrong].mean()) if n_wrong > 0 else None
    conf_ok = float(confidence[~wrong].mean()) if n_wrong < n else None
    return Metrics(
        error_rate=n_wrong / n,
        mean_confidence_on_errors=conf_err,
        mean_confidence_on_correct=conf_ok,
        n=n,
    )


def mean_confidence_overall(m: Metrics) -> float:
    """Mean argmax-class confidence over all examples, recovered as the
    error-rate-weighted average of the two conditional means."""
    err = m.error_rate * (m.mean_confidence_on_errors or 0.0)
    ok = (1.0 - m.error_rate) * (m.mean_confidence_on_correct or 0.0)
    return err + ok
