"""Dataset evaluation: per-sample IoU and aggregate mIoU / oIoU.

Intersections and unions accumulate as plain integers and divide only at
the end, so oIoU is exact and independent of sample order; mIoU uses a
correctly-rounded float sum for the same reason.  Per-sample proposal
failures score 0 and are flagged rather than aborting the run.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimMismatch, EmptyDataset, IoFailure, MissingInput, NoValidProposal
from .io import Mode, RunConfig, load_dataset_index, load_manifest, load_tensor
from .pipeline import segment_sample


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Intersection over union of two binary masks; both empty counts as 1.0."""
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.shape != g.shape:
        raise DimMismatch(f"mask shapes {p.shape} and {g.shape} differ")
    p = p.astype(bool)
    g = g.astype(bool)
    inter = int(np.logical_and(p, g).sum())
    union = int(np.logical_or(p, g).sum())
    if union == 0:
        return 1.0
    return inter / union


@dataclass
class EvalReport:
    mode: Mode
    config: dict
    miou: float
    oiou: float
    per_sample: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "config": self.config,
            "miou": self.miou,
            "oiou": self.oiou,
            "per_sample": self.per_sample,
        }


def _evaluate_one(entry: tuple[str, Path], config: RunConfig) -> dict:
    listed, manifest_path = entry
    manifest = load_manifest(manifest_path)
    if manifest.gt_mask_path is None:
        raise MissingInput(config.mode.value, "gt_mask_path")
    gt = load_tensor(manifest.gt_mask_path)
    record = {"manifest_path": listed}
    try:
        selection = segment_sample(manifest, config)
    except NoValidProposal as exc:
        record.update(
            {"iou": 0.0, "selected_index": -1, "s_best": None, "error": type(exc).__name__}
        )
        return record
    value = iou(selection.selected_mask, gt)
    record.update(
        {
            "iou": value,
            "selected_index": selection.selected_index,
            "s_best": selection.s[selection.selected_index],
        }
    )
    if int(np.asarray(selection.selected_mask).sum()) == 0 and int(gt.sum()) == 0:
        record["degenerate"] = True
    # exact integer tallies for the dataset-level ratio
    p = np.asarray(selection.selected_mask).astype(bool)
    g = gt.astype(bool)
    record["_inter"] = int(np.logical_and(p, g).sum())
    record["_union"] = int(np.logical_or(p, g).sum())
    return record


def evaluate_dataset(dataset: str | Path, config: RunConfig) -> EvalReport:
    """Run the configured mode over every manifest listed in ``dataset.json``."""
    index_path = Path(dataset)
    if index_path.is_dir():
        index_path = index_path / "dataset.json"
    manifest_paths = load_dataset_index(index_path)
    if not manifest_paths:
        raise EmptyDataset(f"{index_path} lists no manifests")
    listed = [os.path.relpath(p, index_path.parent) for p in manifest_paths]
    entries = list(zip(listed, manifest_paths))

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(lambda e: _evaluate_one(e, config), entries))
    else:
        records = [_evaluate_one(e, config) for e in entries]

    inter_total = 0
    union_total = 0
    for record in records:
        inter_total += record.pop("_inter", 0)
        union_total += record.pop("_union", 0)
    miou = math.fsum(r["iou"] for r in records) / len(records)
    oiou = 1.0 if union_total == 0 else inter_total / union_total
    return EvalReport(
        mode=config.mode,
        config=config.to_dict(),
        miou=miou,
        oiou=oiou,
        per_sample=records,
    )


def emit_report(report: EvalReport, path: str | Path | None) -> str:
    """Serialize the report as JSON; write to ``path`` when given.

    Returns the serialized text.  Numbers keep full precision (shortest
    round-trip float representation), so identical runs give identical
    bytes.
    """
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoFailure(f"cannot write report {path}: {exc}") from exc
    return text
