import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from refdiff import FixtureSpec, gen_dataset, save_tensor


def write_manifest(
    directory: Path,
    name: str = "sample.json",
    width: int = 8,
    height: int = 8,
    tokens=("a", "small", "square"),
    root_index: int = 2,
    attention=None,
    proposals=None,
    embeddings=None,
    gt=None,
    image=None,
    directions=None,
    extra=None,
):
    """Assemble a manifest plus its tensor files under ``directory``.

    ``attention`` defaults to a small uniform stack; pass explicit arrays
    to shape the sample, or None for optional fields to omit them.
    """
    directory.mkdir(parents=True, exist_ok=True)
    if attention is None:
        attention = np.full((4, 4, len(tokens), 2), 0.5, dtype=np.float32)
    stem = name.rsplit(".", 1)[0]
    doc = {
        "image_width": width,
        "image_height": height,
        "tokens": list(tokens),
        "root_index": root_index,
        "attention_path": f"{stem}_attention.rdtf",
    }
    save_tensor(np.asarray(attention, dtype=np.float32), directory / doc["attention_path"])
    if directions is not None:
        doc["directions"] = list(directions)
    if proposals is not None:
        doc["proposals_path"] = f"{stem}_proposals.rdtf"
        save_tensor(np.asarray(proposals, dtype=np.uint8), directory / doc["proposals_path"])
    if gt is not None:
        doc["gt_mask_path"] = f"{stem}_gt.rdtf"
        save_tensor(np.asarray(gt, dtype=np.uint8), directory / doc["gt_mask_path"])
    if image is not None:
        doc["image_path"] = f"{stem}_image.rdtf"
        save_tensor(np.asarray(image, dtype=np.uint8), directory / doc["image_path"])
    if embeddings is not None:
        text_vec, pairs = embeddings
        doc["embeddings"] = {
            "dim": len(text_vec),
            "text_vec_path": f"{stem}_text.rdtf",
            "proposals": [],
        }
        save_tensor(np.asarray(text_vec, dtype=np.float32), directory / f"{stem}_text.rdtf")
        for i, (attn_vec, crop_vec) in enumerate(pairs):
            entry = {
                "attn_vec_path": f"{stem}_p{i}_attn.rdtf",
                "crop_vec_path": f"{stem}_p{i}_crop.rdtf",
            }
            save_tensor(np.asarray(attn_vec, dtype=np.float32), directory / entry["attn_vec_path"])
            save_tensor(np.asarray(crop_vec, dtype=np.float32), directory / entry["crop_vec_path"])
            doc["embeddings"]["proposals"].append(entry)
    if extra:
        doc.update(extra)
    path = directory / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def write_dataset_index(directory: Path, manifest_names):
    index = directory / "dataset.json"
    index.write_text(json.dumps({"manifests": list(manifest_names)}))
    return index


@pytest.fixture(scope="session")
def noiseless_dataset(tmp_path_factory):
    """Shared 20-sample seed-42 noiseless fixture dataset."""
    directory = tmp_path_factory.mktemp("fixtures42")
    gen_dataset(FixtureSpec(seed=42, n_samples=20, noise_level=0.0), directory)
    return directory
