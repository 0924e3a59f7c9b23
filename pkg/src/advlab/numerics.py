"""Float64 numerics shared by every model: numerically stable activation
functions, the elementwise sign, deterministic seeded random streams, and
the central-difference gradient oracle that analytic gradients are checked
against.

All array values are C-order float64 numpy arrays. Public operations
guarantee finite outputs for finite inputs.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NonFiniteError, ShapeError

__all__ = [
    "RngStream",
    "assert_all_finite",
    "finite_diff_gradient",
    "sigmoid",
    "sign",
    "softmax",
    "softplus",
]


def assert_all_finite(a: np.ndarray, what: str = "array") -> np.ndarray:
    """Raise :class:`NonFiniteError` if ``a`` contains NaN or infinity."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return a


def softplus(z):
    """softplus(z) = log(1 + exp(z)), computed as max(z,0) + log1p(exp(-|z|)).

    Exact saturation: softplus(z) == z for large positive z, == 0 for large
    negative z, with no overflow anywhere on the float64 range.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid(z):
    """Logistic sigmoid 1 / (1 + exp(-z)), stable for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax of a vector of logits, computed with a max shift.

    Output is strictly positive and sums to 1 within 1e-12 for logit
    magnitudes up to at least 700.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size == 0:
        raise ShapeError(f"softmax expects a non-empty vector, got shape {logits.shape}")
    e = np.exp(logits - logits.max())
    return e / e.sum()


def sign(t):
    """Elementwise sign with sign(0) = 0; values are exactly -1, 0, or +1.

    The zero convention means a zero-gradient coordinate receives no
    perturbation in sign-based attacks.
    """
    return np.sign(np.asarray(t, dtype=np.float64))


def finite_diff_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient oracle: (f(x+h e_i) - f(x-h e_i)) / 2h.

    Slow by construction (2 * x.size evaluations of f); used only to check
    analytic gradients. Raises :class:`NonFiniteError` if any evaluation of
    ``f`` is non-finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if h <= 0:
        raise ValueError("finite-difference step h must be positive")
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteError(f"objective non-finite at coordinate {i}")
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


# 64-bit FNV-1a; maps an RngStream purpose label to a key component.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class RngStream:
    """Deterministic random stream keyed by (seed, purpose).

    Backed by Philox4x64-10, a named counter-based generator with
    platform-independent output. The 128-bit Philox key is
    (seed mod 2^64, FNV-1a-64(purpose)), so streams with distinct purpose
    labels are independent substreams of the same seed by construction,
    and identical (seed, purpose) pairs replay identical sequences.
    """

    def __init__(self, seed: int, purpose: str):
        self.seed = int(seed)
        self.purpose = str(purpose)
        key = np.array([self.seed & _MASK64, _fnv1a64(self.purpose)], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def split(self, purpose: str) -> "RngStream":
        """Derive an independent substream, e.g. for a parallel worker."""
        return RngStream(self.seed, f"{self.purpose}/{purpose}")

    # Thin passthroughs for the draws the package actually uses.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, purpose={self.purpose!r})"
