"""Perturbation generators: the fast gradient sign method, epsilon sweeps
along the fixed sign direction, the two zero-mean noise baselines, and a
norm-preserving rotation of the input toward its loss gradient.

All attacks respect the max-norm contract ||perturbed - x||_inf <= epsilon
(rotation measures its budget as an angle instead). Gradients are always
taken in eval mode: dropout never participates in attack construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateGeometryError, NonFiniteError
from .numerics import RngStream, sign

ATTACK_KINDS = ("fgsm", "random_sign", "uniform_noise", "rotation")

# Rows per gradient block; bounds peak memory on full-test-set attacks.
_CHUNK = 2048


@dataclass
class AttackConfig:
    """What to perturb with: kind, budget, optional output clamp.

    ``epsilon`` is the max-norm budget, except for ``rotation`` where it is
    the angle in radians. ``clamp`` is an (lo, hi) output range, off by
    default: perturbations that leave pixel bounds are still legitimate
    attack inputs, clamping exists for image export.
    """

    kind: str = "fgsm"
    epsilon: float = 0.25
    clamp: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(
                f"unknown attack kind {self.kind!r}, expected one of {ATTACK_KINDS}"
            )
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.clamp is not None:
            lo, hi = self.clamp
            if not lo <= hi:
                raise ConfigError(f"clamp bounds out of order: ({lo}, {hi})")


@dataclass
class SweepResult:
    """Logit trajectories along x + epsilon * sign(grad) for a grid of
    epsilons: the data behind the piecewise-linear sweep plots."""

    epsilons: np.ndarray
    logits_per_eps: np.ndarray
    predicted: np.ndarray
    correct: np.ndarray

    def write_csv(self, path):
        n_classes = self.logits_per_eps.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["epsilon"]
                + [f"logit_{c}" for c in range(n_classes)]
                + ["predicted", "correct"]
            )
            for i, eps in enumerate(self.epsilons):
                writer.writerow(
                    [repr(float(eps))]
                    + [repr(float(v)) for v in self.logits_per_eps[i]]
                    + [int(self.predicted[i]), "true" if self.correct[i] else "false"]
                )


def input_gradients(model, X: np.ndarray, Y) -> np.ndarray:
    """Per-example gradient of the training loss w.r.t. the input, eval
    mode, blocked over the batch."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y)
    out = np.empty_like(X)
    for lo in range(0, X.shape[0], _CHUNK):
        _, _, g = model.batch_grads(X[lo : lo + _CHUNK], Y[lo : lo + _CHUNK])
        out[lo : lo + _CHUNK] = g
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite input gradient")
    return out


def _match_shape(x_in, out):
    return out[0] if np.asarray(x_in).ndim == 1 else out


def _clamp(x, clamp):
    if clamp is None:
        return x
    return np.clip(x, clamp[0], clamp[1])


def fgsm(model, x: np.ndarray, y, epsilon: float, clamp=None) -> np.ndarray:
    """x + epsilon * sign(grad_x loss); the strongest max-norm-budget step
    against a linear model, and a strong one against locally linear models.

    Accepts a single example or a batch (with matching labels). Coordinates
    with exactly zero gradient are left unperturbed (sign(0) = 0).
    """
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Y = np.atleast_1d(np.asarray(y))
    g = input_gradients(model, X, Y)
    out = X + epsilon * sign(g)
    return _match_shape(x, _clamp(out, clamp))


def epsilon_sweep(model, x: np.ndarray, y, grid) -> SweepResult:
    """Record class scores along the ray x + epsilon * d, with the direction
    d = sign(grad_x loss) fixed once at the clean input.

    The grid must be strictly increasing and may span negative epsilons. The
    scores are the model's logits when it has them; for families without
    logits (RBF, ensembles) the per-class log-confidences stand in.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("epsilon_sweep takes a single example")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("epsilon grid must be a non-empty vector")
    if not np.all(np.diff(grid) > 0):
        raise ConfigError("epsilon grid must be strictly increasing")
    direction = sign(input_gradients(model, x[None, :], [y])[0])
    points = x[None, :] + grid[:, None] * direction[None, :]
    scores = _class_scores(model, points)
    idx = scores.argmax(axis=1)
    predicted = np.asarray(model.classes)[idx]
    return SweepResult(
        epsilons=grid,
        logits_per_eps=scores,
        predicted=predicted,
        correct=predicted == y,
    )


def _class_scores(model, X: np.ndarray) -> np.ndarray:
    logits = getattr(model, "logits", None)
    if callable(logits):
        return logits(X)
    return np.log(np.maximum(model.probs(X), 1e-300))


def random_sign_noise(x: np.ndarray, epsilon: float, rng: RngStream) -> np.ndarray:
    """Each coordinate moves by +epsilon or -epsilon with probability 1/2."""
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    signs = rng.integers(0, 2, size=x.shape).astype(np.float64) * 2.0 - 1.0
    return x + epsilon * signs


def uniform_noise(x: np.ndarray, epsilon: float, rng: RngStream) -> np.ndarray:
    """Each coordinate moves by a draw from U(-epsilon, epsilon)."""
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    return x + rng.uniform(-epsilon, epsilon, size=x.shape)


def plane_basis(x: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis (u, v) of span{x, g} with u along x and v the
    component of g orthogonal to x (so rotating from u toward v moves
    toward the gradient)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise DegenerateGeometryError("cannot rotate the zero vector")
    ng = np.linalg.norm(g)
    if ng == 0.0:
        raise DegenerateGeometryError("zero gradient defines no rotation plane")
    u = x / nx
    w = g - (g @ u) * u
    nw = np.linalg.norm(w)
    if nw <= 1e-12 * ng:
        raise DegenerateGeometryError("gradient is parallel to the input")
    return u, w / nw


def rotate_in_plane(
    x: np.ndarray, u: np.ndarray, v: np.ndarray, theta: float
) -> np.ndarray:
    """Rotate x by theta within the plane of the orthonormal pair (u, v),
    leaving the orthogonal complement untouched. Exact identity at theta=0;
    composing theta then -theta in the same plane recovers x."""
    a = x @ u
    b = x @ v
    c, s = np.cos(theta), np.sin(theta)
    return x + (a * (c - 1.0) - b * s) * u + (a * s + b * (c - 1.0)) * v


def rotation_attack(x: np.ndarray, model, y, theta: float) -> np.ndarray:
    """Rotate x toward its loss gradient by angle theta, preserving the
    L2 norm. The plane is span{x, grad}; degenerate geometry (zero or
    parallel vectors) raises."""
    if not 0.0 <= theta <= np.pi / 2:
        raise ConfigError(f"rotation angle must be in [0, pi/2], got {theta}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("rotation_attack takes a single example")
    g = input_gradients(model, x[None, :], [y])[0]
    u, v = plane_basis(x, g)
    return rotate_in_plane(x, u, v, theta)


def apply_attack(model, x: np.ndarray, y, cfg: AttackConfig, rng: RngStream | None = None):
    """Dispatch an AttackConfig over an example or a batch. Noise kinds
    require an RngStream; gradient kinds do not."""
    if cfg.kind == "fgsm":
        return fgsm(model, x, y, cfg.epsilon, cfg.clamp)
    if cfg.kind in ("random_sign", "uniform_noise"):
        if rng is None:
            raise ConfigError(f"attack kind {cfg.kind!r} needs an RngStream")
        noise = random_sign_noise if cfg.kind == "random_sign" else uniform_noise
        return _clamp(noise(x, cfg.epsilon, rng), cfg.clamp)
    # rotation: per-example geometry
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Y = np.atleast_1d(np.asarray(y))
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        out[i] = rotation_attack(X[i], model, Y[i], cfg.epsilon)
    return _match_shape(x, _clamp(out, cfg.clamp))
