"""From the exported cross-attention stack to an image-resolution correlation map.

The stack holds post-softmax attention for every (latent cell, token,
head).  Heads are averaged, the root token's slice is min-max normalized
into [0,1), and the result is resized to image resolution with bilinear
interpolation under the half-pixel-center convention:

    source coord u = (U + 0.5) * w / W - 0.5, clamped to [0, w-1]

All arithmetic runs in float64 regardless of the on-disk dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, IndexOutOfRange


@dataclass
class AttentionStack:
    """Raw cross-attention tensor, shape (w, h, tokens, heads)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4:
            raise DimMismatch(f"attention stack must be 4-d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DimMismatch("attention stack contains non-finite values")
        if arr.min() < 0:
            raise DimMismatch("attention stack contains negative values")
        self.data = arr


@dataclass
class CorrelationMap:
    """Normalized, image-resolution correlation matrix for one token."""

    data: np.ndarray
    source_token: int


def average_heads(stack: AttentionStack) -> np.ndarray:
    """Mean over the head axis: (w, h, l, N) -> (w, h, l)."""
    return stack.data.mean(axis=3)


def select_token_map(avg: np.ndarray, k: int) -> np.ndarray:
    """Slice the per-token map at token index ``k``."""
    n_tokens = avg.shape[2]
    if not 0 <= k < n_tokens:
        raise IndexOutOfRange(f"token index {k} outside 0..{n_tokens - 1}")
    return avg[:, :, k]


def normalize_minmax(m: np.ndarray, epsilon: float) -> np.ndarray:
    """(m - min) / (max - min + epsilon).

    Maps into [0, 1); a constant map collapses to all zeros, which is the
    no-signal case rather than an error.
    """
    m = np.asarray(m, dtype=np.float64)
    lo = m.min()
    hi = m.max()
    return (m - lo) / (hi - lo + epsilon)


def resize_bilinear(m: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of a (w, h) matrix to (width, height).

    Half-pixel centers, edge clamp.  Output values are convex
    combinations of inputs, so bounds are preserved.
    """
    m = np.asarray(m, dtype=np.float64)
    w, h = m.shape
    u = np.clip((np.arange(width) + 0.5) * (w / width) - 0.5, 0.0, w - 1.0)
    v = np.clip((np.arange(height) + 0.5) * (h / height) - 0.5, 0.0, h - 1.0)
    u0 = np.floor(u).astype(np.intp)
    v0 = np.floor(v).astype(np.intp)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = (u - u0)[:, None]
    fv = (v - v0)[None, :]
    return (
        (1.0 - fu) * (1.0 - fv) * m[np.ix_(u0, v0)]
        + fu * (1.0 - fv) * m[np.ix_(u1, v0)]
        + (1.0 - fu) * fv * m[np.ix_(u0, v1)]
        + fu * fv * m[np.ix_(u1, v1)]
    )


def correlation_matrix(
    stack: AttentionStack, k: int, width: int, height: int, epsilon: float
) -> CorrelationMap:
    """Head-average, slice token ``k``, normalize, resize to (width, height)."""
    token_map = select_token_map(average_heads(stack), k)
    data = resize_bilinear(normalize_minmax(token_map, epsilon), width, height)
    return CorrelationMap(data=data, source_token=k)
