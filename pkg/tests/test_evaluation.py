import json

import numpy as np
import pytest

from refdiff import Mode, RunConfig, emit_report, evaluate_dataset, iou
from refdiff.errors import DimMismatch, EmptyDataset, MissingInput

from conftest import write_dataset_index, write_manifest
from oracles import naive_iou_counts

RNG = np.random.default_rng(777)


def test_iou_identical():
    m = np.zeros((5, 5), dtype=np.uint8)
    m[1:3, 1:3] = 1
    assert iou(m, m) == 1.0


def test_iou_disjoint():
    a = np.zeros((4, 4), dtype=np.uint8)
    b = np.zeros((4, 4), dtype=np.uint8)
    a[0, 0] = 1
    b[3, 3] = 1
    assert iou(a, b) == 0.0


def test_iou_half():
    pred = np.zeros((4, 4), dtype=np.uint8)
    gt = np.zeros((4, 4), dtype=np.uint8)
    pred[0, 0:3] = 1
    gt[0, 1:4] = 1  # intersection 2, union 4
    inter, union = naive_iou_counts(pred, gt)
    assert (inter, union) == (2, 4)
    assert iou(pred, gt) == 0.5


def test_iou_both_empty_is_one():
    z = np.zeros((3, 3), dtype=np.uint8)
    assert iou(z, z) == 1.0


def test_iou_dim_mismatch():
    with pytest.raises(DimMismatch):
        iou(np.zeros((3, 3)), np.zeros((4, 4)))


def _single_proposal_sample(directory, name, pred, gt):
    """A GS-ready sample whose sole proposal forces the selection."""
    return write_manifest(
        directory,
        name=name,
        width=pred.shape[0],
        height=pred.shape[1],
        proposals=pred[None, :, :],
        gt=gt,
    )


def _two_sample_dataset(directory):
    pred_a = np.zeros((4, 4), dtype=np.uint8)
    gt_a = np.zeros((4, 4), dtype=np.uint8)
    pred_a[0, 0:3] = 1
    gt_a[0, 1:4] = 1  # IoU 2/4
    pred_b = np.zeros((4, 4), dtype=np.uint8)
    pred_b[2, 2] = 1  # IoU 1/1
    _single_proposal_sample(directory, "a.json", pred_a, gt_a)
    _single_proposal_sample(directory, "b.json", pred_b, pred_b.copy())
    return write_dataset_index(directory, ["a.json", "b.json"])


def test_singleton_dataset(tmp_path):
    pred = np.zeros((4, 4), dtype=np.uint8)
    gt = np.zeros((4, 4), dtype=np.uint8)
    pred[0, 0:3] = 1
    gt[0, 1:4] = 1
    _single_proposal_sample(tmp_path, "a.json", pred, gt)
    write_dataset_index(tmp_path, ["a.json"])
    report = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    assert report.miou == 0.5
    assert report.oiou == 0.5


def test_two_sample_aggregation(tmp_path):
    _two_sample_dataset(tmp_path)
    report = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    assert report.miou == 0.75  # (0.5 + 1.0) / 2
    assert report.oiou == 0.6   # (2 + 1) / (4 + 1)
    assert [r["manifest_path"] for r in report.per_sample] == ["a.json", "b.json"]


def test_empty_dataset(tmp_path):
    write_dataset_index(tmp_path, [])
    with pytest.raises(EmptyDataset):
        evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))


def test_metrics_permutation_invariant(tmp_path):
    _two_sample_dataset(tmp_path)
    forward = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    write_dataset_index(tmp_path, ["b.json", "a.json"])
    backward = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    assert forward.miou == backward.miou
    assert forward.oiou == backward.oiou
    assert [r["manifest_path"] for r in backward.per_sample] == ["b.json", "a.json"]


def test_oiou_equals_miou_for_identical_ratios(tmp_path):
    pred = np.zeros((4, 4), dtype=np.uint8)
    gt = np.zeros((4, 4), dtype=np.uint8)
    pred[0, 0:3] = 1
    gt[0, 1:4] = 1
    _single_proposal_sample(tmp_path, "a.json", pred, gt)
    _single_proposal_sample(tmp_path, "b.json", pred.copy(), gt.copy())
    write_dataset_index(tmp_path, ["a.json", "b.json"])
    report = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    assert report.miou == report.oiou == 0.5


def test_missing_gt_is_fatal(tmp_path):
    pred = np.zeros((4, 4), dtype=np.uint8)
    pred[0, 0] = 1
    write_manifest(tmp_path, name="a.json", width=4, height=4, proposals=pred[None])
    write_dataset_index(tmp_path, ["a.json"])
    with pytest.raises(MissingInput):
        evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))


def test_missing_embeddings_fatal_in_ds(tmp_path):
    _two_sample_dataset(tmp_path)
    with pytest.raises(MissingInput):
        evaluate_dataset(tmp_path, RunConfig(mode=Mode.DS))


def test_proposal_failure_scores_zero_not_fatal(tmp_path):
    # constant attention gives a flat map: mode G has no valid proposal
    gt = np.zeros((8, 8), dtype=np.uint8)
    gt[0:2, 0:2] = 1
    write_manifest(tmp_path, name="flat.json", gt=gt)
    write_dataset_index(tmp_path, ["flat.json"])
    report = evaluate_dataset(tmp_path, RunConfig(mode=Mode.G))
    assert report.miou == 0.0
    assert report.per_sample[0]["error"] == "NoValidProposal"
    assert report.per_sample[0]["selected_index"] == -1


def test_full_alpha_one_matches_gs(noiseless_dataset):
    gs = evaluate_dataset(noiseless_dataset, RunConfig(mode=Mode.GS))
    full = evaluate_dataset(noiseless_dataset, RunConfig(mode=Mode.FULL, alpha=1.0))
    gs_sel = [r["selected_index"] for r in gs.per_sample]
    full_sel = [r["selected_index"] for r in full.per_sample]
    assert gs_sel == full_sel


def test_full_alpha_zero_matches_ds(noiseless_dataset):
    ds = evaluate_dataset(noiseless_dataset, RunConfig(mode=Mode.DS))
    full = evaluate_dataset(noiseless_dataset, RunConfig(mode=Mode.FULL, alpha=0.0))
    assert [r["selected_index"] for r in ds.per_sample] == [
        r["selected_index"] for r in full.per_sample
    ]


def test_report_round_trip_and_order(tmp_path):
    _two_sample_dataset(tmp_path)
    report = evaluate_dataset(tmp_path, RunConfig(mode=Mode.GS))
    out = tmp_path / "report.json"
    text = emit_report(report, out)
    parsed = json.loads(out.read_text())
    assert parsed["miou"] == report.miou
    assert parsed["oiou"] == report.oiou
    assert '"oiou": 0.6' in text
    assert [r["manifest_path"] for r in parsed["per_sample"]] == ["a.json", "b.json"]
