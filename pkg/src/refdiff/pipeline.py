"""Per-sample segmentation: manifest in, scored mask selection out.

Mode input requirements (beyond the always-required attention field):

    G     attention only; proposals come from thresholding the map
    GS    external proposals, generative scoring (alpha forced to 1)
    DS    external proposals + embeddings, discriminative only (alpha 0)
    FULL  everything, fused with the configured alpha

Payloads are loaded lazily so a mode never touches tensor data it does
not use.
"""

from __future__ import annotations

import numpy as np

from .attnmap import AttentionStack, correlation_matrix
from .errors import MissingInput
from .io import Mode, RunConfig, SampleManifest, load_tensor
from .proposals import ingest_external_proposals, weight_free_proposals
from .refexpr import find_root_token
from .scoring import (
    ScoredSelection,
    combine_proposal_embedding,
    discriminative_score,
    fuse_scores,
    generative_score,
    normalize_vector,
    select_best,
)


def _load_embedding_rows(manifest: SampleManifest) -> tuple[np.ndarray, np.ndarray]:
    attn_rows = []
    crop_rows = []
    for attn_path, crop_path in manifest.embeddings.pairs:
        attn_rows.append(load_tensor(attn_path).astype(np.float64))
        crop_rows.append(load_tensor(crop_path).astype(np.float64))
    return np.stack(attn_rows), np.stack(crop_rows)


def segment_sample(manifest: SampleManifest, config: RunConfig) -> ScoredSelection:
    """Run the configured mode on one sample and select the output mask."""
    mode = config.mode
    shape = (manifest.image_width, manifest.image_height)

    if mode is not Mode.G and manifest.proposals_path is None:
        raise MissingInput(mode.value, "proposals_path")
    if mode in (Mode.DS, Mode.FULL) and manifest.embeddings is None:
        raise MissingInput(mode.value, "embeddings")

    c = None
    if mode in (Mode.G, Mode.GS, Mode.FULL):
        stack = AttentionStack(load_tensor(manifest.attention_path))
        k = manifest.root_index
        if k is None:
            k = find_root_token(manifest.tokens)
        c = correlation_matrix(stack, k, *shape, config.epsilon)

    if mode is Mode.G:
        proposals = weight_free_proposals(
            c, config.threshold_set, percentile=config.percentile_thresholds
        )
    else:
        stack_u8 = load_tensor(manifest.proposals_path)
        if mode in (Mode.DS, Mode.FULL):
            attn_vecs, crop_vecs = _load_embedding_rows(manifest)
        else:
            attn_vecs = crop_vecs = None
        proposals = ingest_external_proposals(
            stack_u8, attn_vecs, crop_vecs, expected_shape=shape
        )

    s_gen = None
    if c is not None:
        s_gen = [generative_score(c, m) for m in proposals.masks]

    s_dis = None
    if mode in (Mode.DS, Mode.FULL):
        r = load_tensor(manifest.embeddings.text_vec_path).astype(np.float64)
        if not config.raw_dot:
            r = normalize_vector(r)
        s_dis = []
        for attn_vec, crop_vec in zip(proposals.attn_vecs, proposals.crop_vecs):
            v = combine_proposal_embedding(
                attn_vec, crop_vec, config.beta, normalize=not config.raw_dot
            )
            s_dis.append(discriminative_score(v, r))

    if mode in (Mode.G, Mode.GS):
        alpha = 1.0
    elif mode is Mode.DS:
        alpha = 0.0
    else:
        alpha = config.alpha

    s = fuse_scores(s_gen, s_dis, alpha)
    return select_best(s, proposals.masks, s_gen=s_gen, s_dis=s_dis)
