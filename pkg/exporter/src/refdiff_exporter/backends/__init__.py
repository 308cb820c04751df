"""Model backends.

Each backend turns (image, text, config) into plain numpy results; the
export layer owns all file writing.  ``synthetic`` has no model
dependencies and is fully deterministic; ``clip``/``sam`` need torch +
transformers; ``stable_diffusion`` additionally needs diffusers.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AttentionResult:
    stack: np.ndarray          # (w, h, l, N) float32, post-softmax
    tokens: list[str]          # encoder tokenization, length l
    root_index: int | None
    metadata: dict = field(default_factory=dict)


@dataclass
class EmbeddingResult:
    text_vec: np.ndarray       # (d,) float32, unit norm
    attn_vecs: np.ndarray      # (P, d) float32, masked-attention encoder on x*P
    crop_vecs: np.ndarray      # (P, d) float32, vanilla encoder on x*M_i
    metadata: dict = field(default_factory=dict)


@dataclass
class ProposalResult:
    masks: np.ndarray          # (P, W, H) uint8 in {0,1}
    metadata: dict = field(default_factory=dict)


def get_backend(name: str):
    if name == "synthetic":
        from .synthetic import SyntheticBackend

        return SyntheticBackend()
    if name == "models":
        from .clip import ClipEncoderBackend
        from .sam import SamProposalBackend
        from .stable_diffusion import StableDiffusionAttentionBackend

        return CompositeBackend(
            attention=StableDiffusionAttentionBackend(),
            embeddings=ClipEncoderBackend(),
            proposals=SamProposalBackend(),
        )
    raise ValueError(f"unknown backend {name!r}")


@dataclass
class CompositeBackend:
    attention: object
    embeddings: object
    proposals: object

    def export_attention(self, image, text, config):
        return self.attention.export_attention(image, text, config)

    def export_embeddings(self, image, masks, pbias, text, root_word, config):
        return self.embeddings.export_embeddings(
            image, masks, pbias, text, root_word, config
        )

    def export_proposals(self, image, config):
        return self.proposals.export_proposals(image, config)
