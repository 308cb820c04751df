"""Candidate mask production and sanitization.

Proposals come from two routes: thresholding the correlation map at the
fixed levels 5%..95% (weight-free, no segmentor needed), or ingesting a
segmentor-produced mask stack.  Either way the set is sanitized: empty
and full masks are dropped (downstream score denominators require both a
foreground and a background), and exact duplicates collapse to their
first occurrence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .attnmap import CorrelationMap
from .errors import DimMismatch, NoValidProposal


class ProposalSource(enum.Enum):
    WEIGHT_FREE = "weight_free"
    EXTERNAL = "external"


@dataclass
class ProposalSet:
    masks: list[np.ndarray]  # each (W, H) uint8 in {0,1}
    source: ProposalSource
    attn_vecs: np.ndarray | None = None  # (P, d) rows aligned with masks
    crop_vecs: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.masks)


def threshold_masks(c: np.ndarray, thresholds) -> list[np.ndarray]:
    """Raw pre-sanitization masks, one per threshold, ascending.

    Ascending thresholds give pixelwise-nested masks (each a subset of
    the previous one).
    """
    return [(c >= mu).astype(np.uint8) for mu in thresholds]


def _sanitize(masks):
    """Drop empty/full masks, dedup keeping first occurrence, in order.

    Returns (masks, kept_indices) where indices refer to the input list.
    """
    kept = []
    seen = set()
    out = []
    for i, mask in enumerate(masks):
        total = int(mask.sum())
        if total == 0 or total == mask.size:
            continue
        key = mask.tobytes()
        if key in seen:
            continue
        seen.add(key)
        kept.append(i)
        out.append(mask)
    return out, kept


def dedup_proposals(masks) -> list[np.ndarray]:
    """Exact binary-equality dedup, keeping the first occurrence, stable order."""
    seen = set()
    out = []
    for mask in masks:
        key = np.asarray(mask).tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(mask)
    return out


def weight_free_proposals(
    c: CorrelationMap | np.ndarray,
    thresholds,
    percentile: bool = False,
) -> ProposalSet:
    """Threshold the correlation map at each level and sanitize.

    ``percentile=True`` reinterprets each level as a quantile of the
    map's values instead of an absolute cut (ablation option).
    """
    data = c.data if isinstance(c, CorrelationMap) else np.asarray(c)
    levels = list(thresholds)
    if any(not 0.0 < t < 1.0 for t in levels) or levels != sorted(levels):
        raise ValueError(f"thresholds must be ascending in (0,1), got {levels}")
    if percentile:
        levels = [float(np.quantile(data, t)) for t in levels]
    masks, _ = _sanitize(threshold_masks(data, levels))
    if not masks:
        raise NoValidProposal(
            "every threshold produced an empty or full mask (flat correlation map?)"
        )
    return ProposalSet(masks=masks, source=ProposalSource.WEIGHT_FREE)


def ingest_external_proposals(
    mask_stack: np.ndarray,
    attn_vecs: np.ndarray | None = None,
    crop_vecs: np.ndarray | None = None,
    expected_shape: tuple[int, int] | None = None,
) -> ProposalSet:
    """Sanitize a segmentor-produced (P, W, H) u8 stack.

    Embedding rows, when given, are filtered alongside their masks so
    survivors stay aligned.
    """
    stack = np.asarray(mask_stack)
    if stack.ndim != 3:
        raise DimMismatch(f"proposal stack must be 3-d, got shape {stack.shape}")
    if expected_shape is not None and stack.shape[1:] != tuple(expected_shape):
        raise DimMismatch(
            f"proposal dims {stack.shape[1:]} != expected {tuple(expected_shape)}"
        )
    if stack.max(initial=0) > 1:
        raise DimMismatch("proposal stack contains values outside {0,1}")
    for vecs, name in ((attn_vecs, "attn_vecs"), (crop_vecs, "crop_vecs")):
        if vecs is not None and len(vecs) != len(stack):
            raise DimMismatch(
                f"{name} has {len(vecs)} rows for {len(stack)} proposals"
            )
    masks, kept = _sanitize([stack[i].astype(np.uint8) for i in range(len(stack))])
    if not masks:
        raise NoValidProposal("no proposal survived sanitization")
    return ProposalSet(
        masks=masks,
        source=ProposalSource.EXTERNAL,
        attn_vecs=None if attn_vecs is None else np.asarray(attn_vecs)[kept],
        crop_vecs=None if crop_vecs is None else np.asarray(crop_vecs)[kept],
    )
