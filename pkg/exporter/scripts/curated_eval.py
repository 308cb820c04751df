"""Curated-set sanity harness.

Runs the exporter over a small human-annotated image set and checks two
bars:

  1. the engine-side correlation map's argmax lands inside the referred
     object's bounding box on >= 7/10 images;
  2. engine FULL-mode selection overlaps the human judgment mask
     (IoU >= 0.5) on >= 6/10 images.

Needs real model checkpoints (``--backend models``) to be meaningful;
``--backend synthetic`` exercises the plumbing only.  The curated set is
a JSON file::

    [{"image": "img0.jpg", "text": "the leftmost cup",
      "box": [x0, y0, x1, y1], "judgment_mask": "img0_gt.png"}, ...]

with paths relative to the JSON file and boxes in pixel coordinates.

Usage: python scripts/curated_eval.py --set curated.json --out-dir /tmp/curated
       [--backend models|synthetic] [--config config.json] [--engine-cmd refdiff]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

# the engine package supplies the map construction and the selection CLI
import refdiff
from refdiff import AttentionStack, RunConfig, correlation_matrix

from refdiff_exporter import ExporterConfig, export_sample
from refdiff_exporter.rdtf import read_tensor


def load_mask(path: Path, width: int, height: int) -> np.ndarray:
    if path.suffix == ".rdtf":
        return read_tensor(path)
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return (np.transpose(arr, (1, 0)) >= 128).astype(np.uint8)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--set", required=True, help="curated annotations JSON")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--backend", default="models", choices=["models", "synthetic"])
    parser.add_argument("--config")
    parser.add_argument("--engine-cmd", default="refdiff")
    args = parser.parse_args()

    config = ExporterConfig.from_json(args.config) if args.config else ExporterConfig()
    config.backend = args.backend
    set_path = Path(args.set)
    entries = json.loads(set_path.read_text())
    out_root = Path(args.out_dir)

    argmax_hits = 0
    judgment_hits = 0
    for i, entry in enumerate(entries):
        stem = f"curated_{i:02d}"
        manifest_path = export_sample(
            set_path.parent / entry["image"], entry["text"], out_root / stem,
            config, stem=stem, engine_cmd=args.engine_cmd,
        )
        manifest = refdiff.load_manifest(manifest_path)
        stack = AttentionStack(refdiff.load_tensor(manifest.attention_path))
        k = manifest.root_index if manifest.root_index is not None else 0
        c = correlation_matrix(
            stack, k, manifest.image_width, manifest.image_height, RunConfig().epsilon
        )
        x, y = np.unravel_index(np.argmax(c.data), c.data.shape)
        x0, y0, x1, y1 = entry["box"]
        in_box = x0 <= x < x1 and y0 <= y < y1
        argmax_hits += in_box

        matched = None
        if entry.get("judgment_mask"):
            from refdiff import Mode, segment_sample

            selection = segment_sample(manifest, RunConfig(mode=Mode.FULL))
            judgment = load_mask(
                set_path.parent / entry["judgment_mask"],
                manifest.image_width, manifest.image_height,
            )
            score = refdiff.iou(selection.selected_mask, judgment)
            matched = score >= 0.5
            judgment_hits += matched
        print(
            f"{stem}: argmax {'in' if in_box else 'OUT of'} box"
            + ("" if matched is None else f", judgment {'hit' if matched else 'miss'}")
        )

    n = len(entries)
    print(f"\nargmax-in-box: {argmax_hits}/{n} (bar: 7/10)")
    print(f"judgment matches: {judgment_hits}/{n} (bar: 6/10)")
    ok = argmax_hits * 10 >= 7 * n and judgment_hits * 10 >= 6 * n
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
