"""Rubbish-class evaluation and fooling-image generation: draw inputs from
an isotropic Gaussian (which belong to no digit class), count how often a
model assigns a confident class to them, push samples toward a chosen class
with one gradient step on its probability, and measure how skewed the
false-positive class histogram is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import RngStream, sign, softplus

# 99th percentile of chi-squared with 9 degrees of freedom: the uniform-null
# critical value for a 10-class histogram skew test.
CHI2_CRIT_99_DF9 = 21.666

_CHUNK = 2048


@dataclass
class RubbishReport:
    """How a model treats inputs that belong to no class: the fraction it
    confidently assigns anyway, with what confidence, skewed toward which
    classes."""

    n_samples: int
    error_rate: float
    mean_confidence_on_errors: float | None
    class_histogram: list

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "error_rate": self.error_rate,
            "mean_confidence_on_errors": self.mean_confidence_on_errors,
            "class_histogram": list(self.class_histogram),
        }


@dataclass
class FoolingResult:
    """Outcome of repeated single-step pushes of Gaussian samples toward a
    target class."""

    target_class: int
    attempts: int
    successes: int
    success_rate_per_step: float
    samples: np.ndarray  # up to `keep` successful images, (k, dim)

    def to_dict(self):
        return {
            "target_class": self.target_class,
            "attempts": self.attempts,
            "successes": self.successes,
            "success_rate_per_step": self.success_rate_per_step,
            "n_samples_kept": int(self.samples.shape[0]),
        }


def sample_gaussian_rubbish(n: int, dim: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. draws from N(0, I_dim)."""
    if n < 1:
        raise ConfigError(f"need at least one sample, got {n}")
    return rng.standard_normal((n, dim))


def rubbish_error(model, samples: np.ndarray, threshold: float = 0.5) -> RubbishReport:
    """An error is a sample whose maximum per-class confidence exceeds the
    threshold (strictly); the histogram counts the argmax classes of those
    errors."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0:
        raise ConfigError("rubbish_error requires at least one sample")
    n_classes = len(model.classes)
    hist = np.zeros(n_classes, dtype=np.int64)
    n_err = 0
    conf_sum = 0.0
    for lo in range(0, samples.shape[0], _CHUNK):
        p = model.probs(samples[lo : lo + _CHUNK])
        idx = p.argmax(axis=1)
        conf = p[np.arange(p.shape[0]), idx]
        err = conf > threshold
        n_err += int(err.sum())
        conf_sum += float(conf[err].sum())
        hist += np.bincount(idx[err], minlength=n_classes)
    return RubbishReport(
        n_samples=samples.shape[0],
        error_rate=n_err / samples.shape[0],
        mean_confidence_on_errors=(conf_sum / n_err) if n_err else None,
        class_histogram=[int(c) for c in hist],
    )


def fooling_step(
    model, x: np.ndarray, target: int, epsilon: float, variant: str = "sign"
) -> np.ndarray:
    """One step up the gradient of p(class=target | x): the sign variant
    moves epsilon * sign(grad), the raw variant epsilon * grad. A zero
    gradient leaves x unchanged."""
    if variant not in ("sign", "raw"):
        raise ConfigError(f"variant must be sign or raw, got {variant!r}")
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    g = model.prob_grad_input(X, target)
    step = sign(g) if variant == "sign" else g
    out = X + epsilon * step
    return out[0] if single else out


def generate_fooling_images(
    model,
    target: int,
    epsilon: float,
    rng: RngStream,
    threshold: float = 0.5,
    max_attempts: int = 100,
    variant: str = "sign",
    keep: int = 16,
) -> FoolingResult:
    """Draw Gaussian samples, push each once toward the target class, and
    count how often a single step already crosses the confidence threshold.
    Zero successes is a result, not an error."""
    if max_attempts < 1:
        raise ConfigError("max_attempts must be >= 1")
    dim = model.input_dim
    matches = np.flatnonzero(np.asarray(model.classes) == target)
    if matches.size == 0:
        raise ValueError(f"target {target} not among model classes")
    tgt = int(matches[0])
    X = sample_gaussian_rubbish(max_attempts, dim, rng)
    stepped = fooling_step(model, X, tgt, epsilon, variant)
    kept = []
    successes = 0
    for lo in range(0, max_attempts, _CHUNK):
        p = model.probs(stepped[lo : lo + _CHUNK])
        ok = p[:, tgt] > threshold
        successes += int(ok.sum())
        for row in stepped[lo : lo + _CHUNK][ok]:
            if len(kept) < keep:
                kept.append(row)
    return FoolingResult(
        target_class=target,
        attempts=max_attempts,
        successes=successes,
        success_rate_per_step=successes / max_attempts,
        samples=np.array(kept) if kept else np.empty((0, dim)),
    )


def rubbish_augmented_loss(model, x: np.ndarray) -> float:
    """The rejection loss for one rubbish input: cross-entropy against the
    uniform distribution for a softmax top (minimum ln C, reached at the
    uniform output), or the sum of binary cross-entropies against all-absent
    for an independent-sigmoid top (minimum 0)."""
    top = getattr(model, "top", None)
    logits_fn = getattr(model, "logits", None)
    if logits_fn is None or top not in (None, "softmax", "sigmoid"):
        raise ConfigError("rubbish loss needs a softmax or sigmoid top")
    if top is None and model.family != "softmax":
        raise ConfigError("rubbish loss needs a softmax or sigmoid top")
    z = logits_fn(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]
    if top == "sigmoid":
        return float(softplus(z).sum())
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    return float(lse - z.mean())


def chi_squared_uniform(histogram) -> float:
    """Pearson chi-squared statistic of a count histogram against the
    uniform distribution over its bins. Zero counts give statistic 0."""
    h = np.asarray(histogram, dtype=np.float64)
    total = h.sum()
    if total == 0:
        return 0.0
    expected = total / h.size
    return float(((h - expected) ** 2 / expected).sum())
