"""The four model families: binary logistic regression, softmax regression,
maxout networks with dropout, and a shallow per-class RBF network — plus the
probability-averaging ensemble.

Every family exposes the same surface:

- ``probs(X)``: per-class confidences, eval mode;
- ``losses(X, Y)``: per-example training loss, eval mode;
- ``batch_grads(X, Y, masks=...)``: mean loss, mean parameter gradients, and
  per-example input gradients in one backward pass;
- ``loss_grad(x, y)`` / ``forward(x, y)``: single-example wrappers;
- ``prob_grad_input(X, targets)``: gradient of a target class probability
  with respect to the input (the fooling-image primitive);
- ``param_arrays()``: live parameter dict for SGD and gradient checking.

Gradients are analytic throughout; the finite-difference oracle in
:mod:`advlab.numerics` is the ground truth they are tested against.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, NonFiniteError, ShapeError
from .metrics import Metrics, metrics_from_predictions
from .numerics import RngStream, assert_all_finite, sigmoid, softplus

# Probabilities this close to 0/1 are clamped inside logs so that public
# losses stay finite even at exactly-degenerate inputs (e.g. x == mu).
_TINY = 1e-300

# Batch rows processed per block where an intermediate would otherwise be
# batch x classes x dim (RBF center differences).
_CHUNK = 512


@dataclass
class ModelOutput:
    """Per-example forward result: class scores, confidences, optional loss."""

    logits: np.ndarray | None
    probs: np.ndarray
    loss: float | None


@dataclass
class GradientBundle:
    """Gradients of a per-example loss with respect to parameters and input."""

    grad_params: dict[str, np.ndarray]
    grad_input: np.ndarray


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ShapeError(f"expected a vector or a batch of vectors, got shape {x.shape}")


class LogisticModel:
    """Binary logistic regression over labels y in {-1, +1}.

    P(y=+1 | x) = sigmoid(w.x + b); the training loss is
    softplus(-y (w.x + b)). ``probs`` orders classes (-1, +1).
    """

    family = "logistic"

    def __init__(self, w: np.ndarray, b: float):
        self.w = assert_all_finite(np.asarray(w, dtype=np.float64), "w").copy()
        self.b = np.asarray(float(b), dtype=np.float64)
        self.classes = np.array([-1, 1])

    @classmethod
    def zeros(cls, dim: int) -> "LogisticModel":
        return cls(np.zeros(dim), 0.0)

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    def clone(self) -> "LogisticModel":
        return copy.deepcopy(self)

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def activation(self, X: np.ndarray) -> np.ndarray:
        if X.shape[-1] != self.w.shape[0]:
            raise ShapeError(
                f"input dim {X.shape[-1]} != weight dim {self.w.shape[0]}"
            )
        return X @ self.w + self.b

    def probs(self, X: np.ndarray) -> np.ndarray:
        p = sigmoid(self.activation(np.atleast_2d(X)))
        return np.stack([1.0 - p, p], axis=1)

    def losses(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return softplus(-np.asarray(Y, dtype=np.float64) * self.activation(X))

    def label_index(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y)
        if not np.all(np.isin(Y, self.classes)):
            raise ValueError("logistic labels must be -1 or +1")
        return ((Y + 1) // 2).astype(np.int64)

    def forward(self, x: np.ndarray, y: int | None = None) -> ModelOutput:
        X, _ = _as_batch(x)
        a = float(self.activation(X)[0])
        p = sigmoid(a)
        loss = None
        if y is not None:
            if y not in (-1, 1):
                raise ValueError(f"logistic label must be -1 or +1, got {y}")
            loss = float(softplus(-y * a))
        return ModelOutput(
            logits=np.array([a]), probs=np.array([1.0 - p, p]), loss=loss
        )

    def batch_grads(self, X: np.ndarray, Y: np.ndarray, masks=None):
        Y = np.asarray(Y, dtype=np.float64)
        a = self.activation(X)
        # d/da softplus(-y a) = -y sigmoid(-y a)
        da = -Y * sigmoid(-Y * a)
        n = X.shape[0]
        grads = {"w": da @ X / n, "b": np.asarray(da.mean())}
        grad_input = da[:, None] * self.w[None, :]
        loss = float(softplus(-Y * a).mean())
        return loss, grads, grad_input

    def loss_grad(self, x: np.ndarray, y: int, dropout=None) -> GradientBundle:
        X, _ = _as_batch(x)
        self.label_index(np.array([y]))
        loss, grads, gin = self.batch_grads(X, np.array([y]))
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite logistic loss")
        return GradientBundle(grad_params=grads, grad_input=gin[0])

    def prob_grad_input(self, X: np.ndarray, targets) -> np.ndarray:
        """Gradient of probs[target] w.r.t. x; target 1 is class +1."""
        X = np.atleast_2d(X)
        t = np.broadcast_to(np.asarray(targets, dtype=np.int64), X.shape[:1])
        a = self.activation(X)
        s = sigmoid(a)
        scale = s * (1.0 - s) * np.where(t == 1, 1.0, -1.0)
        return scale[:, None] * self.w[None, :]


class SoftmaxModel:
    """Multiclass softmax regression with cross-entropy loss."""

    family = "softmax"

    def __init__(self, W: np.ndarray, b: np.ndarray):
        self.W = assert_all_finite(np.asarray(W, dtype=np.float64), "W").copy()
        self.b = assert_all_finite(np.asarray(b, dtype=np.float64), "b").copy()
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeError("W must be (classes, dim) and b (classes,)")
        self.classes = np.arange(self.W.shape[0])

    @classmethod
    def zeros(cls, dim: int, n_classes: int) -> "SoftmaxModel":
        return cls(np.zeros((n_classes, dim)), np.zeros(n_classes))

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def clone(self) -> "SoftmaxModel":
        return copy.deepcopy(self)

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}

    def label_index(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.int64)
        if Y.min() < 0 or Y.max() >= self.n_classes:
            raise ValueError("label outside class range")
        return Y

    def logits(self, X: np.ndarray) -> np.ndarray:
        if X.shape[-1] != self.input_dim:
            raise ShapeError(f"input dim {X.shape[-1]} != {self.input_dim}")
        return np.atleast_2d(X) @ self.W.T + self.b

    def probs(self, X: np.ndarray) -> np.ndarray:
        p, _, _ = kernels.softmax_xent(self.logits(X))
        return p

    def losses(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        _, losses, _ = kernels.softmax_xent(self.logits(X), self.label_index(Y))
        return losses

    def forward(self, x: np.ndarray, y: int | None = None) -> ModelOutput:
        X, _ = _as_batch(x)
        z = self.logits(X)
        if y is None:
            p, _, _ = kernels.softmax_xent(z)
            return ModelOutput(logits=z[0], probs=p[0], loss=None)
        p, losses, _ = kernels.softmax_xent(z, self.label_index(np.array([y])))
        return ModelOutput(logits=z[0], probs=p[0], loss=float(losses[0]))

    def batch_grads(self, X: np.ndarray, Y: np.ndarray, masks=None):
        return self.batch_grads_target(X, ("labels", self.label_index(Y)))

    def batch_grads_target(self, X: np.ndarray, target, masks=None):
        """Gradients for a head target: ("labels", idx) is the supervised
        loss; ("uniform",) is cross-entropy against the uniform distribution
        (the rubbish rejection loss)."""
        X = np.atleast_2d(X)
        z = self.logits(X)
        if target[0] == "labels":
            _, losses, dz = kernels.softmax_xent(z, target[1])
        elif target[0] == "uniform":
            probs, _, _ = kernels.softmax_xent(z)
            m = z.max(axis=1)
            lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
            losses = lse - z.mean(axis=1)
            dz = probs - 1.0 / self.n_classes
        else:
            raise ConfigError(f"target {target[0]!r} unsupported for softmax")
        n = X.shape[0]
        grads = {"W": dz.T @ X / n, "b": dz.mean(axis=0)}
        grad_input = dz @ self.W
        return float(losses.mean()), grads, grad_input

    def loss_grad(self, x: np.ndarray, y: int, dropout=None) -> GradientBundle:
        X, _ = _as_batch(x)
        loss, grads, gin = self.batch_grads(X, np.array([y]))
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite softmax loss")
        return GradientBundle(grad_params=grads, grad_input=gin[0])

    def prob_grad_input(self, X: np.ndarray, targets) -> np.ndarray:
        X = np.atleast_2d(X)
        t = np.broadcast_to(np.asarray(targets, dtype=np.int64), X.shape[:1])
        p, _, _ = kernels.softmax_xent(self.logits(X))
        rows = np.arange(X.shape[0])
        dz = -p * p[rows, t][:, None]
        dz[rows, t] += p[rows, t]
        return dz @ self.W


@dataclass
class MaxoutLayer:
    """One maxout hidden layer: W (units, pieces, in_dim), b (units, pieces)."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 3:
            raise ShapeError("maxout W must be (units, pieces, in_dim)")
        if self.W.shape[1] < 2:
            raise ConfigError("maxout needs k >= 2 pieces per unit")
        if self.b.shape != self.W.shape[:2]:
            raise ShapeError("maxout b must be (units, pieces)")

    @property
    def units(self) -> int:
        return self.W.shape[0]

    @property
    def pieces(self) -> int:
        return self.W.shape[1]

    @property
    def in_dim(self) -> int:
        return self.W.shape[2]


class MaxoutModel:
    """Maxout MLP: hidden units take the max of k affine pieces; inverted
    dropout at train time; a softmax or independent-sigmoid top layer.

    Eval-mode calls (``probs``, ``losses``, ``batch_grads`` without masks)
    apply no dropout. Train-mode calls take explicit 0/1 masks from
    :meth:`draw_masks` so a training step can reuse one mask set across
    several loss terms.
    """

    family = "maxout"

    def __init__(
        self,
        layers: list[MaxoutLayer],
        top_W: np.ndarray,
        top_b: np.ndarray,
        retain_input: float = 1.0,
        retain_hidden: tuple[float, ...] | None = None,
        top: str = "softmax",
    ):
        if not layers:
            raise ConfigError("at least one maxout layer required")
        self.layers = layers
        self.top_W = np.asarray(top_W, dtype=np.float64).copy()
        self.top_b = np.asarray(top_b, dtype=np.float64).copy()
        if top not in ("softmax", "sigmoid"):
            raise ConfigError(f"top must be softmax or sigmoid, got {top!r}")
        self.top = top
        retain_hidden = retain_hidden or tuple(1.0 for _ in layers)
        if len(retain_hidden) != len(layers):
            raise ConfigError("one hidden retain rate per layer required")
        for r in (retain_input, *retain_hidden):
            if not 0.0 < r <= 1.0:
                raise ConfigError(f"retain probability {r} outside (0, 1]")
        self.retain_input = float(retain_input)
        self.retain_hidden = tuple(float(r) for r in retain_hidden)
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.in_dim != prev.units:
                raise ShapeError("consecutive maxout layer dimensions mismatch")
        if self.top_W.shape[1] != layers[-1].units:
            raise ShapeError("top layer width mismatch")
        self.classes = np.arange(self.top_W.shape[0])

    @classmethod
    def init(
        cls,
        dim: int,
        n_classes: int,
        units: int,
        pieces: int,
        rng: RngStream,
        retain_input: float = 1.0,
        retain_hidden: float = 1.0,
        top: str = "softmax",
        weight_scale: float | None = None,
    ) -> "MaxoutModel":
        scale = weight_scale if weight_scale is not None else 1.0 / np.sqrt(dim)
        W = rng.standard_normal((units, pieces, dim)) * scale
        b = np.zeros((units, pieces))
        top_W = rng.standard_normal((n_classes, units)) * (1.0 / np.sqrt(units))
        top_b = np.zeros(n_classes)
        return cls(
            [MaxoutLayer(W, b)],
            top_W,
            top_b,
            retain_input=retain_input,
            retain_hidden=(retain_hidden,),
            top=top,
        )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def n_classes(self) -> int:
        return self.top_W.shape[0]

    def clone(self) -> "MaxoutModel":
        return copy.deepcopy(self)

    def param_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            out[f"layer{i}_W"] = layer.W
            out[f"layer{i}_b"] = layer.b
        out["top_W"] = self.top_W
        out["top_b"] = self.top_b
        return out

    def label_index(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.int64)
        if Y.min() < 0 or Y.max() >= self.n_classes:
            raise ValueError("label outside class range")
        return Y

    def draw_masks(self, batch: int, rng: RngStream) -> dict:
        """One 0/1 keep-mask per example per layer (inverted-dropout scaling
        by 1/retain happens where the mask is applied)."""
        masks = {
            "input": (rng.uniform(size=(batch, self.input_dim)) < self.retain_input)
            .astype(np.float64)
        }
        masks["hidden"] = [
            (rng.uniform(size=(batch, layer.units)) < r).astype(np.float64)
            for layer, r in zip(self.layers, self.retain_hidden)
        ]
        return masks

    def _forward(self, X: np.ndarray, masks=None):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ShapeError(f"input dim {X.shape[1]} != {self.input_dim}")
        H = X
        if masks is not None:
            H = H * (masks["input"] / self.retain_input)
        acts = [H]
        argmaxes = []
        for li, layer in enumerate(self.layers):
            h, k, d = layer.W.shape
            Z = H @ layer.W.reshape(h * k, d).T + layer.b.reshape(h * k)
            Hn, A = kernels.maxout_reduce(np.ascontiguousarray(Z.reshape(-1, h, k)))
            if masks is not None:
                Hn = Hn * (masks["hidden"][li] / self.retain_hidden[li])
            acts.append(Hn)
            argmaxes.append(A)
        logits = acts[-1] @ self.top_W.T + self.top_b
        return logits, (acts, argmaxes)

    def _backward(self, dlogits: np.ndarray, cache, masks=None):
        acts, argmaxes = cache
        grads = {"top_W": dlogits.T @ acts[-1], "top_b": dlogits.sum(axis=0)}
        dH = dlogits @ self.top_W
        for li in reversed(range(len(self.layers))):
            layer = self.layers[li]
            h, k, d = layer.W.shape
            if masks is not None:
                dH = dH * (masks["hidden"][li] / self.retain_hidden[li])
            dZ = kernels.maxout_scatter(
                np.ascontiguousarray(dH), argmaxes[li], k
            ).reshape(-1, h * k)
            grads[f"layer{li}_W"] = (dZ.T @ acts[li]).reshape(h, k, d)
            grads[f"layer{li}_b"] = dZ.sum(axis=0).reshape(h, k)
            dH = dZ @ layer.W.reshape(h * k, d)
        if masks is not None:
            dH = dH * (masks["input"] / self.retain_input)
        return grads, dH

    def _head(self, logits: np.ndarray, target):
        """probs, per-example losses, dlogits for a head target.

        Targets: ("labels", idx array) — usual supervised loss;
        ("uniform",) — softmax cross-entropy against the uniform
        distribution; ("zeros",) — sigmoid BCE against all-absent.
        """
        kind = target[0]
        if self.top == "softmax":
            if kind == "labels":
                return kernels.softmax_xent(logits, target[1])
            probs, _, _ = kernels.softmax_xent(logits)
            if kind == "uniform":
                m = logits.max(axis=1)
                lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
                losses = lse - logits.mean(axis=1)
                dlogits = probs - 1.0 / self.n_classes
                return probs, losses, dlogits
            raise ConfigError(f"target {kind!r} unsupported for softmax top")
        # independent sigmoids: per-class BCE, stable via softplus
        probs = sigmoid(logits)
        if kind == "labels":
            T = np.zeros_like(logits)
            T[np.arange(logits.shape[0]), target[1]] = 1.0
        elif kind == "zeros":
            T = np.zeros_like(logits)
        else:
            raise ConfigError(f"target {kind!r} unsupported for sigmoid top")
        losses = (T * softplus(-logits) + (1.0 - T) * softplus(logits)).sum(axis=1)
        dlogits = probs - T
        return probs, losses, dlogits

    def probs(self, X: np.ndarray, masks=None) -> np.ndarray:
        logits, _ = self._forward(X, masks)
        return self._probs_from_logits(logits)

    def _probs_from_logits(self, logits: np.ndarray) -> np.ndarray:
        if self.top == "softmax":
            p, _, _ = kernels.softmax_xent(logits)
            return p
        return sigmoid(logits)

    def logits(self, X: np.ndarray, masks=None) -> np.ndarray:
        return self._forward(X, masks)[0]

    def losses(self, X: np.ndarray, Y: np.ndarray, masks=None) -> np.ndarray:
        logits, _ = self._forward(X, masks)
        return self._head(logits, ("labels", self.label_index(Y)))[1]

    def forward(self, x: np.ndarray, y: int | None = None, masks=None) -> ModelOutput:
        X, _ = _as_batch(x)
        logits, _ = self._forward(X, masks)
        probs = self._probs_from_logits(logits)
        loss = None
        if y is not None:
            _, losses, _ = self._head(logits, ("labels", self.label_index(np.array([y]))))
            loss = float(losses[0])
        return ModelOutput(logits=logits[0], probs=probs[0], loss=loss)

    def batch_grads_target(self, X: np.ndarray, target, masks=None):
        """Mean loss, mean parameter grads, per-example input grads for an
        arbitrary head target (see :meth:`_head`)."""
        X = np.atleast_2d(X)
        n = X.shape[0]
        logits, cache = self._forward(X, masks)
        _, losses, dlogits = self._head(logits, target)
        grads, grad_input = self._backward(dlogits, cache, masks)
        for name in grads:
            grads[name] /= n
        return float(losses.mean()), grads, grad_input

    def batch_grads(self, X: np.ndarray, Y: np.ndarray, masks=None):
        return self.batch_grads_target(X, ("labels", self.label_index(Y)), masks)

    def loss_grad(self, x: np.ndarray, y: int, dropout=None) -> GradientBundle:
        """Single-example gradients; ``dropout`` is None (eval mode), an
        RngStream to draw masks from, or an explicit mask dict."""
        X, _ = _as_batch(x)
        masks = dropout
        if isinstance(dropout, RngStream):
            masks = self.draw_masks(1, dropout)
        loss, grads, gin = self.batch_grads(X, np.array([y]), masks)
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite maxout loss")
        return GradientBundle(grad_params=grads, grad_input=gin[0])

    def prob_grad_input(self, X: np.ndarray, targets) -> np.ndarray:
        X = np.atleast_2d(X)
        t = np.broadcast_to(np.asarray(targets, dtype=np.int64), X.shape[:1])
        logits, cache = self._forward(X)
        rows = np.arange(X.shape[0])
        if self.top == "softmax":
            p, _, _ = kernels.softmax_xent(logits)
            dlogits = -p * p[rows, t][:, None]
            dlogits[rows, t] += p[rows, t]
        else:
            s = sigmoid(logits[rows, t])
            dlogits = np.zeros_like(logits)
            dlogits[rows, t] = s * (1.0 - s)
        _, grad_input = self._backward(dlogits, cache)
        return grad_input


class RbfModel:
    """Shallow RBF network: per-class confidence exp(-gamma_c ||x - mu_c||^2).

    Confidences are independent per-class beliefs in (0, 1] (no sum
    constraint); the training loss is the sum over classes of binary
    cross-entropy against the one-hot target.
    """

    family = "rbf"

    def __init__(self, mu: np.ndarray, gamma: np.ndarray):
        self.mu = assert_all_finite(np.asarray(mu, dtype=np.float64), "mu").copy()
        self.gamma = assert_all_finite(
            np.asarray(gamma, dtype=np.float64), "gamma"
        ).copy()
        if self.mu.ndim != 2 or self.gamma.shape != (self.mu.shape[0],):
            raise ShapeError("mu must be (classes, dim) and gamma (classes,)")
        if np.any(self.gamma <= 0):
            raise ConfigError("RBF widths gamma must be strictly positive")
        self.classes = np.arange(self.mu.shape[0])

    @classmethod
    def init_from_data(cls, X: np.ndarray, Y: np.ndarray, n_classes: int) -> "RbfModel":
        """Centers at per-class means; widths 1 / mean squared distance."""
        dim = X.shape[1]
        mu = np.zeros((n_classes, dim))
        gamma = np.ones(n_classes)
        for c in range(n_classes):
            Xc = X[np.asarray(Y) == c]
            if len(Xc) == 0:
                raise ValueError(f"no examples of class {c}")
            mu[c] = Xc.mean(axis=0)
            msd = float(((Xc - mu[c]) ** 2).sum(axis=1).mean())
            gamma[c] = 1.0 / max(msd, 1e-12)
        return cls(mu, gamma)

    @property
    def input_dim(self) -> int:
        return self.mu.shape[1]

    @property
    def n_classes(self) -> int:
        return self.mu.shape[0]

    def clone(self) -> "RbfModel":
        return copy.deepcopy(self)

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {"mu": self.mu, "gamma": self.gamma}

    def label_index(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.int64)
        if Y.min() < 0 or Y.max() >= self.n_classes:
            raise ValueError("label outside class range")
        return Y

    def sq_dists(self, X: np.ndarray) -> np.ndarray:
        """(B, C) squared distances, exact at x == mu_c; blocked so the
        (B, C, dim) difference tensor never materializes whole."""
        X = np.atleast_2d(X)
        if X.shape[1] != self.input_dim:
            raise ShapeError(f"input dim {X.shape[1]} != {self.input_dim}")
        out = np.empty((X.shape[0], self.n_classes))
        for lo in range(0, X.shape[0], _CHUNK):
            diff = X[lo : lo + _CHUNK, None, :] - self.mu[None, :, :]
            out[lo : lo + _CHUNK] = np.einsum("bcd,bcd->bc", diff, diff)
        return out

    def probs(self, X: np.ndarray) -> np.ndarray:
        return np.exp(-self.gamma[None, :] * self.sq_dists(X))

    def losses(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        g = self.gamma[None, :] * self.sq_dists(X)
        T = np.zeros_like(g)
        T[np.arange(g.shape[0]), self.label_index(Y)] = 1.0
        # -t log p = t * g exactly; -(1-t) log(1-p) clamped to stay finite
        log1mp = np.log(np.maximum(-np.expm1(-g), _TINY))
        return (T * g - (1.0 - T) * log1mp).sum(axis=1)

    def forward(self, x: np.ndarray, y: int | None = None) -> ModelOutput:
        X, _ = _as_batch(x)
        probs = self.probs(X)[0]
        loss = None
        if y is not None:
            loss = float(self.losses(X, np.array([y]))[0])
        return ModelOutput(logits=None, probs=probs, loss=loss)

    def batch_grads(self, X: np.ndarray, Y: np.ndarray, masks=None):
        X = np.atleast_2d(X)
        n = X.shape[0]
        yidx = self.label_index(Y)
        grad_input = np.empty_like(X)
        dmu = np.zeros_like(self.mu)
        dgamma = np.zeros_like(self.gamma)
        loss_sum = 0.0
        for lo in range(0, n, _CHUNK):
            Xc = X[lo : lo + _CHUNK]
            diff = Xc[:, None, :] - self.mu[None, :, :]
            s = np.einsum("bcd,bcd->bc", diff, diff)
            g = self.gamma[None, :] * s
            p = np.exp(-g)
            T = np.zeros_like(g)
            T[np.arange(Xc.shape[0]), yidx[lo : lo + _CHUNK]] = 1.0
            log1mp = np.log(np.maximum(-np.expm1(-g), _TINY))
            loss_sum += float((T * g - (1.0 - T) * log1mp).sum())
            # d loss / d g_c = t_c - (1 - t_c) p_c / (1 - p_c)
            dg = T - (1.0 - T) * (p / np.maximum(1.0 - p, _TINY))
            dgamma += (dg * s).sum(axis=0)
            ds = dg * self.gamma[None, :]
            grad_input[lo : lo + _CHUNK] = 2.0 * np.einsum("bc,bcd->bd", ds, diff)
            dmu -= 2.0 * np.einsum("bc,bcd->cd", ds, diff)
        grads = {"mu": dmu / n, "gamma": dgamma / n}
        return loss_sum / n, grads, grad_input

    def loss_grad(self, x: np.ndarray, y: int, dropout=None) -> GradientBundle:
        X, _ = _as_batch(x)
        loss, grads, gin = self.batch_grads(X, np.array([y]))
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite RBF loss")
        return GradientBundle(grad_params=grads, grad_input=gin[0])

    def project_params(self):
        """Keep widths strictly positive after an SGD step."""
        np.maximum(self.gamma, 1e-8, out=self.gamma)

    def prob_grad_input(self, X: np.ndarray, targets) -> np.ndarray:
        X = np.atleast_2d(X)
        t = np.broadcast_to(np.asarray(targets, dtype=np.int64), X.shape[:1])
        rows = np.arange(X.shape[0])
        diff = X - self.mu[t]
        g = self.gamma[t] * (diff ** 2).sum(axis=1)
        p = np.exp(-g)
        return (-2.0 * self.gamma[t] * p)[:, None] * diff


class EnsembleModel:
    """Average of member probability vectors; the attack loss is the
    cross-entropy of the averaged probabilities."""

    family = "ensemble"

    def __init__(self, members: list):
        if not members:
            raise ConfigError("ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.input_dim != first.input_dim or not np.array_equal(
                m.classes, first.classes
            ):
                raise ConfigError("ensemble members must share input/label space")
        self.members = list(members)
        self.classes = first.classes.copy()

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def clone(self) -> "EnsembleModel":
        return copy.deepcopy(self)

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {}  # members are trained individually, never jointly

    def label_index(self, Y: np.ndarray) -> np.ndarray:
        return self.members[0].label_index(Y)

    def probs(self, X: np.ndarray) -> np.ndarray:
        acc = self.members[0].probs(X)
        for m in self.members[1:]:
            acc = acc + m.probs(X)
        return acc / len(self.members)

    def losses(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        p = self.probs(X)
        rows = np.arange(p.shape[0])
        return -np.log(np.maximum(p[rows, self.label_index(Y)], _TINY))

    def forward(self, x: np.ndarray, y: int | None = None) -> ModelOutput:
        X, _ = _as_batch(x)
        probs = self.probs(X)[0]
        loss = None
        if y is not None:
            loss = float(self.losses(X, np.array([y]))[0])
        return ModelOutput(logits=None, probs=probs, loss=loss)

    def batch_grads(self, X: np.ndarray, Y: np.ndarray, masks=None):
        X = np.atleast_2d(X)
        yidx = self.label_index(Y)
        rows = np.arange(X.shape[0])
        pbar = self.probs(X)[rows, yidx]
        gsum = np.zeros_like(X)
        for m in self.members:
            gsum += m.prob_grad_input(X, yidx)
        gsum /= len(self.members)
        grad_input = -gsum / np.maximum(pbar, _TINY)[:, None]
        loss = float(-np.log(np.maximum(pbar, _TINY)).mean())
        return loss, {}, grad_input

    def loss_grad(self, x: np.ndarray, y: int, dropout=None) -> GradientBundle:
        X, _ = _as_batch(x)
        _, _, gin = self.batch_grads(X, np.array([y]))
        return GradientBundle(grad_params={}, grad_input=gin[0])

    def prob_grad_input(self, X: np.ndarray, targets) -> np.ndarray:
        acc = self.members[0].prob_grad_input(X, targets)
        for m in self.members[1:]:
            acc = acc + m.prob_grad_input(X, targets)
        return acc / len(self.members)


def model_loss_grad(model, x: np.ndarray, y, dropout=None) -> GradientBundle:
    """Analytic loss gradients for any model family (spec operation)."""
    return model.loss_grad(x, y, dropout=dropout)


def predict_metrics(model, dataset, batch: int = 512) -> Metrics:
    """Error rate and confidence triple of a model on a dataset.

    Confidence of a prediction is the argmax-class probability (for RBF and
    sigmoid tops: the unnormalized confidence of the argmax class).
    """
    X, Y = dataset.inputs, dataset.labels
    if len(X) == 0:
        raise ShapeError("predict_metrics requires a non-empty dataset")
    preds = np.empty(len(X), dtype=np.int64)
    confs = np.empty(len(X))
    for lo in range(0, len(X), batch):
        p = model.probs(X[lo : lo + batch])
        idx = p.argmax(axis=1)
        preds[lo : lo + batch] = model.classes[idx]
        confs[lo : lo + batch] = p[np.arange(p.shape[0]), idx]
    return metrics_from_predictions(preds, confs, np.asarray(Y))
