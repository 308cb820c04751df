"""Exporter: pre-trained models in, engine-format files out."""

from .config import ExporterConfig
from .export import (
    export_attention,
    export_embeddings,
    export_proposals,
    export_sample,
    load_image,
)
from .rdtf import read_tensor, write_tensor

__version__ = "0.1.0"
