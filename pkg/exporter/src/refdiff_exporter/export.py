"""Export operations: run a backend and lay its results out on disk in
the engine's formats (RDTF tensors + manifest JSON + metadata sidecar).

The positional-bias file comes from the engine's ``emit-pbias`` command
(two-pass protocol): attention and proposals are exported first, a
partial manifest is written, the engine derives the bias from it, and
embeddings are exported against that bias.
"""

from __future__ import annotations

import json
import subprocess
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import get_backend
from .config import ExporterConfig
from .rdtf import read_tensor, write_tensor
from .text import direction_clues, head_word_index, words


def load_image(path: str | Path) -> np.ndarray:
    """Decode a standard image file into a (W, H, 3) u8 array."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"))  # (H, W, 3)
    return np.transpose(rgb, (1, 0, 2)).copy()


def export_attention(image: np.ndarray, text: str, config: ExporterConfig,
                     out_path: Path, backend=None):
    backend = backend or get_backend(config.backend)
    result = backend.export_attention(image, text, config)
    if result.stack.ndim != 4:
        raise ValueError(f"backend returned {result.stack.ndim}-d attention")
    if result.stack.shape[2] != len(result.tokens):
        raise ValueError("token dim does not match the token list")
    write_tensor(result.stack.astype(np.float32), out_path)
    return result


def export_proposals(image: np.ndarray, config: ExporterConfig,
                     out_path: Path, backend=None):
    backend = backend or get_backend(config.backend)
    result = backend.export_proposals(image, config)
    masks = np.asarray(result.masks, dtype=np.uint8)
    if masks.ndim != 3 or masks.shape[1:] != image.shape[:2]:
        raise ValueError(f"proposal stack {masks.shape} does not match the image")
    if masks.max(initial=0) > 1:
        raise ValueError("proposal masks must be binary")
    write_tensor(masks, out_path)
    return result


def export_embeddings(image: np.ndarray, masks: np.ndarray, pbias: np.ndarray,
                      text: str, config: ExporterConfig, out_dir: Path,
                      stem: str, backend=None):
    backend = backend or get_backend(config.backend)
    word_list = words(text)
    root_word = word_list[head_word_index(word_list)] if word_list else ""
    result = backend.export_embeddings(image, masks, pbias, text, root_word, config)
    norm = float(np.linalg.norm(result.text_vec.astype(np.float64)))
    if not 0.999 < norm < 1.001:
        raise ValueError(f"text vector must be unit norm, got {norm}")
    text_path = out_dir / f"{stem}_text.rdtf"
    write_tensor(result.text_vec.astype(np.float32), text_path)
    entries = []
    for i in range(len(masks)):
        attn_path = out_dir / f"{stem}_p{i}_attn.rdtf"
        crop_path = out_dir / f"{stem}_p{i}_crop.rdtf"
        write_tensor(result.attn_vecs[i].astype(np.float32), attn_path)
        write_tensor(result.crop_vecs[i].astype(np.float32), crop_path)
        entries.append(
            {"attn_vec_path": attn_path.name, "crop_vec_path": crop_path.name}
        )
    embeddings_doc = {
        "dim": int(result.text_vec.shape[0]),
        "text_vec_path": text_path.name,
        "proposals": entries,
    }
    return result, embeddings_doc


def _run_engine_pbias(engine_cmd: str, manifest_path: Path, out_path: Path):
    cmd = [engine_cmd, "emit-pbias", "--manifest", str(manifest_path),
           "--out", str(out_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"engine emit-pbias failed ({proc.returncode}): {proc.stderr.strip()}"
        )


def export_sample(image_path: str | Path, text: str, out_dir: str | Path,
                  config: ExporterConfig, stem: str = "sample",
                  gt_mask: np.ndarray | None = None,
                  engine_cmd: str = "refdiff", backend=None) -> Path:
    """Full per-sample export; returns the manifest path.

    Order: attention -> proposals -> partial manifest -> engine
    emit-pbias -> embeddings -> final manifest + metadata sidecar.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    backend = backend or get_backend(config.backend)
    image = load_image(image_path)
    W, H = image.shape[:2]

    attention_path = out_dir / f"{stem}_attention.rdtf"
    attn = export_attention(image, text, config, attention_path, backend)
    proposals_path = out_dir / f"{stem}_proposals.rdtf"
    props = export_proposals(image, config, proposals_path, backend)
    image_out = out_dir / f"{stem}_image.rdtf"
    write_tensor(image, image_out)

    manifest = {
        "image_width": W,
        "image_height": H,
        "tokens": attn.tokens,
        "attention_path": attention_path.name,
        "directions": direction_clues(words(text)),
        "proposals_path": proposals_path.name,
        "image_path": image_out.name,
    }
    if attn.root_index is not None:
        manifest["root_index"] = attn.root_index
    if gt_mask is not None:
        gt_path = out_dir / f"{stem}_gt.rdtf"
        write_tensor(np.asarray(gt_mask, dtype=np.uint8), gt_path)
        manifest["gt_mask_path"] = gt_path.name
    manifest_path = out_dir / f"{stem}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    pbias_path = out_dir / f"{stem}_pbias.rdtf"
    _run_engine_pbias(engine_cmd, manifest_path, pbias_path)
    pbias = read_tensor(pbias_path).astype(np.float64)

    masks = read_tensor(proposals_path)
    emb, embeddings_doc = export_embeddings(
        image, masks, pbias, text, config, out_dir, stem, backend
    )
    manifest["embeddings"] = embeddings_doc
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")

    sidecar = {
        "text": text,
        "config": config.to_dict(),
        "attention": attn.metadata,
        "proposals": props.metadata,
        "embeddings": emb.metadata,
    }
    (out_dir / f"{stem}.meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return manifest_path
