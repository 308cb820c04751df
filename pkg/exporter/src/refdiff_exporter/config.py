"""Exporter configuration, loadable from a JSON file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class ExporterConfig:
    # diffusion capture
    noise_step: int = 2
    image_resolution: int = 1024  # resize-and-pad target for model input
    attention_layers: list[str] = field(default_factory=lambda: ["up:16", "up:32"])
    diffusion_model: str = "runwayml/stable-diffusion-v1-5"
    # contrastive encoders
    clip_model: str = "openai/clip-vit-base-patch16"
    embedding_dim: int = 512
    vision_encoder_patch_grid: int = 14
    # segmentor
    sam_model: str = "facebook/sam-vit-base"
    sam_points_per_side: int = 8
    sam_iou_threshold: float = 0.7
    # synthetic backend
    synthetic_latent_grid: int = 16
    synthetic_seed: int = 0
    backend: str = "synthetic"

    def __post_init__(self):
        if self.noise_step < 1:
            raise ValueError("noise_step must be >= 1")
        if self.image_resolution < 8:
            raise ValueError("image_resolution too small")
        if self.embedding_dim < 2:
            raise ValueError("embedding_dim too small")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExporterConfig":
        doc = json.loads(Path(path).read_text())
        return cls(**doc)
