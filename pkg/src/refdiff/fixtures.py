"""Deterministic synthetic samples for model-free pipeline testing.

Each sample plants an axis-aligned target rectangle plus distractors,
then synthesizes every input the pipeline can consume: an attention
stack whose root-token slice is hot over the target's latent footprint,
a proposal stack holding the exact target mask, each distractor, and one
random rectangle, embeddings built so the target wins the
discriminative comparison, and the target as ground truth.

Randomness comes from SplitMix64 so fixtures reproduce bit-for-bit
across platforms and languages.  Constants:

    state advance:  state += 0x9E3779B97F4A7C15   (mod 2^64)
    output mix:     z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
                    z ^= z >> 27; z *= 0x94D049BB133111EB
                    z ^= z >> 31
    float in [0,1): (z >> 11) * 2^-53

Per-sample streams are seeded with mix(seed + (index + 1) * GAMMA).
Target rectangles span at least 4x4 latent cells: thresholding the
resized map can erode or dilate a mask by up to one latent cell per
side, and 4x4 is the smallest size whose worst-case IoU against the
planted rectangle stays above one half.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoFailure
from .io import save_tensor

_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _mix(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Minimal splittable 64-bit generator; see module docstring for constants."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def next_int(self, n: int) -> int:
        """Uniform-ish integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.next_float() * n), n - 1)


def sample_stream(seed: int, index: int) -> SplitMix64:
    return SplitMix64(_mix((seed + (index + 1) * _GAMMA) & _MASK64))


_TOKEN_POOL = ["the", "planted", "target", "region", "under", "test", "with", "noise"]
_MIN_CELLS = 4  # per side, keeps worst-case mode-G IoU above 0.5


@dataclass
class FixtureSpec:
    seed: int = 42
    image_width: int = 64
    image_height: int = 64
    latent_width: int = 16
    latent_height: int = 16
    n_tokens: int = 4
    n_heads: int = 2
    embed_dim: int = 16
    n_samples: int = 20
    n_distractors: int = 2
    noise_level: float = 0.0

    def __post_init__(self):
        if self.latent_width > self.image_width or self.latent_height > self.image_height:
            raise ValueError("latent grid must not exceed the image grid")
        if self.n_distractors < 1:
            raise ValueError("need at least one distractor")
        if self.noise_level < 0:
            raise ValueError("noise level must be >= 0")
        if self.latent_width < 2 * _MIN_CELLS or self.latent_height < 2 * _MIN_CELLS:
            raise ValueError(
                f"latent grid must be at least {2 * _MIN_CELLS} cells per side"
            )
        if self.n_tokens < 1 or self.n_heads < 1 or self.embed_dim < 2:
            raise ValueError("degenerate tensor dims")

    @property
    def root_index(self) -> int:
        return 2 if self.n_tokens >= 3 else self.n_tokens - 1

    @property
    def tokens(self) -> list[str]:
        pool = list(_TOKEN_POOL)
        while len(pool) < self.n_tokens:
            pool.append(f"tok{len(pool)}")
        return pool[: self.n_tokens]


def _cells_to_pixels(rect, cells_w, cells_h, width, height):
    i0, j0, cw, ch = rect
    x0 = round(i0 * width / cells_w)
    x1 = round((i0 + cw) * width / cells_w)
    y0 = round(j0 * height / cells_h)
    y1 = round((j0 + ch) * height / cells_h)
    return x0, x1, y0, y1


def _rect_mask(rect_px, width, height) -> np.ndarray:
    x0, x1, y0, y1 = rect_px
    mask = np.zeros((width, height), dtype=np.uint8)
    mask[x0:x1, y0:y1] = 1
    return mask


def _disjoint(a, b) -> bool:
    ai, aj, aw, ah = a
    bi, bj, bw, bh = b
    return ai + aw <= bi or bi + bw <= ai or aj + ah <= bj or bj + bh <= aj


def _draw_rect(rng: SplitMix64, cells_w: int, cells_h: int, min_side: int, max_side: int):
    cw = min_side + rng.next_int(max_side - min_side + 1)
    ch = min_side + rng.next_int(max_side - min_side + 1)
    i0 = rng.next_int(cells_w - cw + 1)
    j0 = rng.next_int(cells_h - ch + 1)
    return i0, j0, cw, ch


def _place_distractors(rng, spec, taken):
    rects = []
    for _ in range(spec.n_distractors):
        placed = None
        for _attempt in range(200):
            cand = _draw_rect(rng, spec.latent_width, spec.latent_height, 2, 3)
            if all(_disjoint(cand, t) for t in taken):
                placed = cand
                break
        if placed is None:
            placed = _scan_free_cell(spec, taken)
        taken.append(placed)
        rects.append(placed)
    return rects


def _scan_free_cell(spec, taken):
    """Deterministic fallback: first 1x1 cell clear of everything placed."""
    for i in range(spec.latent_width):
        for j in range(spec.latent_height):
            cand = (i, j, 1, 1)
            if all(_disjoint(cand, t) for t in taken):
                return cand
    raise IoFailure("latent grid too crowded to place distractors")


def _orthonormal_against(rng, r):
    """Unit vector orthogonal to r, drawn deterministically."""
    d = len(r)
    for _ in range(100):
        raw = np.array([2.0 * rng.next_float() - 1.0 for _ in range(d)])
        raw -= (raw @ r) * r
        norm = np.linalg.norm(raw)
        if norm > 1e-9:
            return raw / norm
    raise IoFailure("could not draw an orthogonal vector")


def gen_sample(spec: FixtureSpec, index: int, out_dir: str | Path) -> Path:
    """Write one sample's tensors and manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = sample_stream(spec.seed, index)
    W, H = spec.image_width, spec.image_height
    w, h = spec.latent_width, spec.latent_height

    max_side = max(_MIN_CELLS, min(w, h) // 2)
    target = _draw_rect(rng, w, h, _MIN_CELLS, max_side)
    taken = [target]
    distractors = _place_distractors(rng, spec, taken)

    rect_pxs = [_cells_to_pixels(r, w, h, W, H) for r in [target] + distractors]
    while True:
        rand_rect = _draw_rect(rng, w, h, 2, max_side)
        rand_px = _cells_to_pixels(rand_rect, w, h, W, H)
        if rand_px not in rect_pxs:
            break
    rect_pxs.append(rand_px)

    masks = [_rect_mask(px, W, H) for px in rect_pxs]
    order = list(range(len(masks)))
    for i in range(len(order) - 1, 0, -1):  # Fisher-Yates
        j = rng.next_int(i + 1)
        order[i], order[j] = order[j], order[i]
    masks = [masks[i] for i in order]
    target_pos = order.index(0)

    # attention stack: hot over the target cells in the root-token slice
    base = np.zeros((w, h))
    i0, j0, cw, ch = target
    base[i0 : i0 + cw, j0 : j0 + ch] = 1.0
    stack = np.empty((w, h, spec.n_tokens, spec.n_heads))
    for x in range(w):
        for y in range(h):
            for t in range(spec.n_tokens):
                for n in range(spec.n_heads):
                    if t == spec.root_index:
                        stack[x, y, t, n] = base[x, y] + spec.noise_level * rng.next_float()
                    else:
                        stack[x, y, t, n] = 0.25 * rng.next_float()

    # embeddings: target matches the text vector exactly, others sit at cosine 0.3
    r = np.array([2.0 * rng.next_float() - 1.0 for _ in range(spec.embed_dim)])
    r /= np.linalg.norm(r)
    vecs = []
    for pos in range(len(masks)):
        if pos == target_pos:
            vecs.append(r.copy())
        else:
            orth = _orthonormal_against(rng, r)
            vecs.append(0.3 * r + np.sqrt(1.0 - 0.09) * orth)

    stem = f"sample_{index:03d}"
    attention_path = out_dir / f"{stem}_attention.rdtf"
    proposals_path = out_dir / f"{stem}_proposals.rdtf"
    gt_path = out_dir / f"{stem}_gt.rdtf"
    text_vec_path = out_dir / f"{stem}_text.rdtf"
    save_tensor(stack.astype(np.float32), attention_path)
    save_tensor(np.stack(masks).astype(np.uint8), proposals_path)
    save_tensor(masks[target_pos], gt_path)
    save_tensor(r.astype(np.float32), text_vec_path)

    entries = []
    for pos, vec in enumerate(vecs):
        attn_vec_path = out_dir / f"{stem}_p{pos}_attn.rdtf"
        crop_vec_path = out_dir / f"{stem}_p{pos}_crop.rdtf"
        save_tensor(vec.astype(np.float32), attn_vec_path)
        save_tensor(vec.astype(np.float32), crop_vec_path)
        entries.append(
            {"attn_vec_path": attn_vec_path.name, "crop_vec_path": crop_vec_path.name}
        )

    manifest = {
        "image_width": W,
        "image_height": H,
        "tokens": spec.tokens,
        "root_index": spec.root_index,
        "directions": [],
        "attention_path": attention_path.name,
        "proposals_path": proposals_path.name,
        "embeddings": {
            "dim": spec.embed_dim,
            "text_vec_path": text_vec_path.name,
            "proposals": entries,
        },
        "gt_mask_path": gt_path.name,
    }
    manifest_path = out_dir / f"{stem}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def gen_dataset(spec: FixtureSpec, out_dir: str | Path) -> Path:
    """Generate ``n_samples`` manifests plus the dataset index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [gen_sample(spec, i, out_dir).name for i in range(spec.n_samples)]
    index_path = out_dir / "dataset.json"
    index_path.write_text(json.dumps({"manifests": names}, indent=2) + "\n")
    return index_path
