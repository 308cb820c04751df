"""Deterministic model-free backend.

Stands in for the real encoders during pipeline and protocol tests:
attention follows image luminance (the root token attends to bright
regions), proposals threshold luminance at fixed quantiles, and
embeddings are seeded projections of masked-image statistics.  Outputs
are deterministic functions of (image bytes, text, config).
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..text import head_word_index, words
from . import AttentionResult, EmbeddingResult, ProposalResult


def _seed_from(*parts: bytes) -> int:
    digest = hashlib.sha256(b"\x00".join(parts)).digest()
    return int.from_bytes(digest[:8], "little")


def _luminance(image: np.ndarray) -> np.ndarray:
    rgb = image.astype(np.float64)
    return 0.2126 * rgb[:, :, 0] + 0.7152 * rgb[:, :, 1] + 0.0722 * rgb[:, :, 2]


def _downsample(m: np.ndarray, w: int, h: int) -> np.ndarray:
    """Box-average a (W, H) map onto a (w, h) grid."""
    W, H = m.shape
    xs = np.linspace(0, W, w + 1).astype(int)
    ys = np.linspace(0, H, h + 1).astype(int)
    out = np.empty((w, h))
    for i in range(w):
        for j in range(h):
            block = m[xs[i] : max(xs[i + 1], xs[i] + 1), ys[j] : max(ys[j + 1], ys[j] + 1)]
            out[i, j] = block.mean()
    return out


class SyntheticBackend:
    def export_attention(self, image, text, config) -> AttentionResult:
        tokens = words(text)
        if not tokens:
            raise ValueError("empty text")
        root = head_word_index(tokens)
        grid = config.synthetic_latent_grid
        w = min(grid, image.shape[0])
        h = min(grid, image.shape[1])
        lum = _downsample(_luminance(image), w, h)
        span = lum.max() - lum.min()
        hot = (lum - lum.min()) / (span if span > 0 else 1.0)
        rng = np.random.default_rng(
            _seed_from(image.tobytes(), text.encode(), b"attn", str(config.synthetic_seed).encode())
        )
        stack = 0.05 + 0.2 * rng.random((w, h, len(tokens), 2))
        stack[:, :, root, :] = hot[:, :, None] + 0.01
        return AttentionResult(
            stack=stack.astype(np.float32),
            tokens=tokens,
            root_index=root,
            metadata={"backend": "synthetic", "signal": "luminance", "grid": [w, h]},
        )

    def export_proposals(self, image, config) -> ProposalResult:
        lum = _luminance(image)
        masks = []
        seen = set()
        for q in (0.3, 0.5, 0.7, 0.85):
            mask = (lum >= np.quantile(lum, q)).astype(np.uint8)
            total = int(mask.sum())
            if total == 0 or total == mask.size:
                continue
            key = mask.tobytes()
            if key in seen:
                continue
            seen.add(key)
            masks.append(mask)
        W, H = lum.shape
        half_w, half_h = W // 2, H // 2
        for x0, y0 in ((0, 0), (half_w, 0), (0, half_h), (half_w, half_h)):
            mask = np.zeros((W, H), dtype=np.uint8)
            mask[x0 : x0 + half_w, y0 : y0 + half_h] = 1
            key = mask.tobytes()
            if mask.sum() and key not in seen:
                seen.add(key)
                masks.append(mask)
        if not masks:
            raise ValueError("image too small for synthetic proposals")
        return ProposalResult(
            masks=np.stack(masks),
            metadata={"backend": "synthetic", "quantiles": [0.3, 0.5, 0.7, 0.85]},
        )

    def export_embeddings(self, image, masks, pbias, text, root_word, config) -> EmbeddingResult:
        d = config.embedding_dim
        proj_rng = np.random.default_rng(_seed_from(b"proj", str(config.synthetic_seed).encode()))
        projection = proj_rng.normal(size=(8, d))  # shared stat-to-embedding map

        def embed(stats: np.ndarray) -> np.ndarray:
            vec = stats @ projection
            norm = np.linalg.norm(vec)
            return vec / (norm if norm > 0 else 1.0)

        def stats_for(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
            fg = mask.astype(bool)
            if not fg.any():
                return np.zeros(8)
            sel = img[fg].astype(np.float64) / 255.0
            xs, ys = np.nonzero(fg)
            return np.array(
                [
                    sel[:, 0].mean(), sel[:, 1].mean(), sel[:, 2].mean(),
                    sel.std(),
                    fg.mean(),
                    xs.mean() / mask.shape[0], ys.mean() / mask.shape[1],
                    1.0,
                ]
            )

        biased = (image.astype(np.float64) * pbias[:, :, None]).astype(np.uint8)
        attn_vecs = []
        crop_vecs = []
        for mask in masks:
            attn_vecs.append(embed(stats_for(biased, mask)))
            crop_vecs.append(embed(stats_for(image * mask[:, :, None], mask)))
        text_rng = np.random.default_rng(_seed_from(b"text", text.encode()))
        global_vec = text_rng.normal(size=d)
        root_rng = np.random.default_rng(_seed_from(b"root", root_word.encode()))
        root_vec = root_rng.normal(size=d)
        r = (global_vec / np.linalg.norm(global_vec) + root_vec / np.linalg.norm(root_vec)) / 2.0
        r /= np.linalg.norm(r)
        return EmbeddingResult(
            text_vec=r.astype(np.float32),
            attn_vecs=np.stack(attn_vecs).astype(np.float32),
            crop_vecs=np.stack(crop_vecs).astype(np.float32),
            metadata={
                "backend": "synthetic",
                "text_combination": "mean_of_normalized_then_normalize",
            },
        )
