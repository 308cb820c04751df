"""Segmentor plumbing on a tiny randomly initialized SAM."""

import numpy as np
import pytest

torch = pytest.importorskip("torch")
transformers = pytest.importorskip("transformers")

from transformers import SamConfig, SamModel

from refdiff_exporter.backends.sam import SamProposalBackend
from refdiff_exporter.config import ExporterConfig


def tiny_sam():
    config = SamConfig(
        vision_config=dict(
            hidden_size=32, intermediate_size=64, num_hidden_layers=2,
            num_attention_heads=2, image_size=64, patch_size=8,
            output_channels=32, mlp_dim=64, num_pos_feats=16,
        ),
        prompt_encoder_config=dict(
            hidden_size=32, image_embedding_size=8, image_size=64,
            mask_input_channels=4,
        ),
        mask_decoder_config=dict(
            hidden_size=32, iou_head_hidden_dim=32, num_multimask_outputs=3,
        ),
    )
    torch.manual_seed(2)
    return SamModel(config).eval()


@pytest.fixture(scope="module")
def backend():
    return SamProposalBackend(model=tiny_sam())


def _config():
    # random weights predict arbitrary IoU; accept everything
    return ExporterConfig(sam_points_per_side=3, sam_iou_threshold=-1e9)


def test_proposals_are_valid_stack(backend):
    rng = np.random.default_rng(11)
    image = rng.integers(0, 256, size=(40, 56, 3)).astype(np.uint8)
    result = backend.export_proposals(image, _config())
    masks = result.masks
    assert masks.ndim == 3
    assert masks.shape[1:] == (40, 56)
    assert masks.dtype == np.uint8
    assert set(np.unique(masks)) <= {0, 1}
    assert masks.shape[0] > 0


def test_masks_are_proper_and_distinct(backend):
    rng = np.random.default_rng(12)
    image = rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8)
    result = backend.export_proposals(image, _config())
    seen = set()
    for mask in result.masks:
        total = int(mask.sum())
        assert 0 < total < mask.size
        key = mask.tobytes()
        assert key not in seen
        seen.add(key)


def test_iou_threshold_filters(backend):
    rng = np.random.default_rng(13)
    image = rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8)
    permissive = backend.export_proposals(image, _config())
    strict_config = ExporterConfig(sam_points_per_side=3, sam_iou_threshold=1e9)
    with pytest.raises(ValueError):
        backend.export_proposals(image, strict_config)
    assert permissive.masks.shape[0] >= 1


def test_metadata_records_model_choices(backend):
    rng = np.random.default_rng(14)
    image = rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8)
    result = backend.export_proposals(image, _config())
    assert result.metadata["points_per_side"] == 3
    assert result.metadata["binarization"] == "sigmoid>=0.5"
    assert result.metadata["backend"] == "sam"
