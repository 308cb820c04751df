"""Per-proposal scores, fusion, and final selection.

The generative score compares mean correlation inside a mask against the
mean outside; the discriminative score is the similarity between the
text vector and a proposal's combined visual embedding.  Fused scores
are a convex combination controlled by ``alpha`` and the winner is the
argmax (ties break to the lowest index).

Embeddings are L2-normalized before the dot product so both score
families live in [-1, 1]; the ``raw_dot`` flag skips normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attnmap import CorrelationMap
from .errors import (
    DegenerateMask,
    DimMismatch,
    EmptyProposalSet,
    LengthMismatch,
    ZeroVector,
)
from .io import Direction


@dataclass
class PositionalBias:
    """Soft 1-to-0 ramp over the image, all ones when no clue is present."""

    data: np.ndarray  # (W, H) float64 in [0,1]


@dataclass
class ScoredSelection:
    s_gen: list[float] | None
    s_dis: list[float] | None
    s: list[float]
    selected_index: int
    selected_mask: np.ndarray


def generative_score(c: CorrelationMap | np.ndarray, mask: np.ndarray) -> float:
    """Mean correlation inside the mask minus mean outside, in [-1, 1]."""
    data = c.data if isinstance(c, CorrelationMap) else np.asarray(c, dtype=np.float64)
    m = np.asarray(mask)
    if m.shape != data.shape:
        raise DimMismatch(f"mask shape {m.shape} != map shape {data.shape}")
    fg = m.astype(bool)
    n_fg = int(fg.sum())
    n_bg = m.size - n_fg
    if n_fg == 0 or n_bg == 0:
        raise DegenerateMask(f"mask has {n_fg} foreground of {m.size} pixels")
    inside = float(data[fg].sum()) / n_fg
    outside = float(data[~fg].sum()) / n_bg
    return inside - outside


def _axis_ramp(n: int, ascending: bool, profile: str) -> np.ndarray:
    """Ramp over ``n`` cells from 1 down to 0 (or up), all ones for n == 1."""
    if n == 1:
        return np.ones(1)
    x = np.arange(n) / (n - 1)
    if profile == "cosine":
        ramp = (1.0 + np.cos(np.pi * x)) / 2.0
    else:
        ramp = 1.0 - x
    return ramp[::-1].copy() if ascending else ramp


def build_positional_bias(
    directions: set[Direction],
    width: int,
    height: int,
    profile: str = "linear",
) -> PositionalBias:
    """Per-axis ramps multiplied elementwise; empty direction set gives all ones."""
    bias = np.ones((width, height))
    if Direction.LEFT in directions:
        bias *= _axis_ramp(width, ascending=False, profile=profile)[:, None]
    if Direction.RIGHT in directions:
        bias *= _axis_ramp(width, ascending=True, profile=profile)[:, None]
    if Direction.TOP in directions:
        bias *= _axis_ramp(height, ascending=False, profile=profile)[None, :]
    if Direction.BOTTOM in directions:
        bias *= _axis_ramp(height, ascending=True, profile=profile)[None, :]
    return PositionalBias(data=bias)


def combine_proposal_embedding(
    e_attn: np.ndarray,
    e_crop: np.ndarray,
    beta: float,
    normalize: bool = True,
) -> np.ndarray:
    """Convex combination ``beta * e_attn + (1-beta) * e_crop``, L2-normalized."""
    a = np.asarray(e_attn, dtype=np.float64)
    b = np.asarray(e_crop, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimMismatch(f"embedding shapes {a.shape} and {b.shape} differ")
    v = beta * a + (1.0 - beta) * b
    if not normalize:
        return v
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("combined embedding has zero norm")
    return v / norm


def discriminative_score(v: np.ndarray, r: np.ndarray) -> float:
    """Dot product between a proposal embedding and the text vector."""
    v = np.asarray(v, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if v.shape != r.shape or v.ndim != 1:
        raise DimMismatch(f"vector shapes {v.shape} and {r.shape} differ")
    return float(v @ r)


def normalize_vector(r: np.ndarray) -> np.ndarray:
    """L2-normalize, rejecting the zero vector."""
    r = np.asarray(r, dtype=np.float64)
    norm = float(np.linalg.norm(r))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return r / norm


def fuse_scores(
    s_gen: list[float] | None,
    s_dis: list[float] | None,
    alpha: float,
) -> list[float]:
    """``alpha * s_gen + (1-alpha) * s_dis`` elementwise.

    A missing branch is allowed only when its weight is zero (alpha
    forced to 1 in generative-only modes, 0 in the discriminative-only
    mode).
    """
    if s_gen is None and s_dis is None:
        raise LengthMismatch("both score lists are absent")
    if s_dis is None:
        if alpha != 1.0:
            raise LengthMismatch("discriminative scores absent but alpha != 1")
        return [float(x) for x in s_gen]
    if s_gen is None:
        if alpha != 0.0:
            raise LengthMismatch("generative scores absent but alpha != 0")
        return [float(x) for x in s_dis]
    if len(s_gen) != len(s_dis):
        raise LengthMismatch(f"{len(s_gen)} generative vs {len(s_dis)} discriminative")
    return [alpha * g + (1.0 - alpha) * d for g, d in zip(s_gen, s_dis)]


def select_best(
    s: list[float],
    masks: list[np.ndarray],
    s_gen: list[float] | None = None,
    s_dis: list[float] | None = None,
) -> ScoredSelection:
    """Argmax selection; ties break to the lowest index."""
    if not s or not masks:
        raise EmptyProposalSet("no proposals to select from")
    if len(s) != len(masks):
        raise LengthMismatch(f"{len(s)} scores for {len(masks)} masks")
    best = 0
    for i in range(1, len(s)):
        if s[i] > s[best]:
            best = i
    return ScoredSelection(
        s_gen=None if s_gen is None else [float(x) for x in s_gen],
        s_dis=None if s_dis is None else [float(x) for x in s_dis],
        s=[float(x) for x in s],
        selected_index=best,
        selected_mask=masks[best],
    )
