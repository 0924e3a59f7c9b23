"""Pure-numpy implementations of the training-loop hot kernels.

Reference semantics for the compiled backend in ``_kernels_cy``: both must
agree on every output, including argmax tie-breaking (first maximum wins)
and the max-shifted softmax formula.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def maxout_reduce(z: np.ndarray):
    """Max and argmax over the trailing piece axis of z (B, h, k).

    Returns (hmax (B,h) float64, amax (B,h) int64); ties go to the lowest
    piece index.
    """
    amax = z.argmax(axis=2).astype(np.int64, copy=False)
    hmax = np.take_along_axis(z, amax[:, :, None], axis=2)[:, :, 0]
    return hmax, amax


def maxout_scatter(dh: np.ndarray, amax: np.ndarray, k: int) -> np.ndarray:
    """Route unit gradients dh (B,h) to the winning pieces: dz (B,h,k)."""
    b, h = dh.shape
    dz = np.zeros((b, h, k), dtype=np.float64)
    np.put_along_axis(dz, amax[:, :, None], dh[:, :, None], axis=2)
    return dz


def softmax_xent(logits: np.ndarray, labels=None):
    """Row softmax with optional fused cross-entropy and its logit gradient.

    Returns (probs, losses, dlogits); losses and dlogits are None when
    labels is None. losses[i] = logsumexp(logits[i]) - logits[i, labels[i]],
    dlogits = probs - onehot(labels).
    """
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    if labels is None:
        return probs, None, None
    rows = np.arange(logits.shape[0])
    losses = (m[:, 0] + np.log(s[:, 0])) - logits[rows, labels]
    dlogits = probs.copy()
    dlogits[rows, labels] -= 1.0
    return probs, losses, dlogits
