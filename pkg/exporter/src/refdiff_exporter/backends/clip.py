"""Contrastive-encoder backend (torch + transformers).

Two image views per proposal: the crop view runs the stock encoder on
the mask-multiplied image; the attention view runs an encoder whose
self-attention drops every CLS-to-patch weight outside the proposal (no
renormalization) on the position-biased image.  Both read the CLS state
of the penultimate layer, pass it through the final layernorm, and
project into the shared space.  The text vector is the unit-normalized
mean of the pooled text feature and the root token's projected feature.
"""

from __future__ import annotations

import numpy as np

from ..text import head_word_index, map_word_to_subtoken, words
from . import EmbeddingResult

_CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
_CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


def _torch():
    import torch

    return torch


class MaskedSelfAttention:
    """Wraps a CLIP attention module; zeroes CLS-row weights at dropped patches."""

    def __new__(cls, inner, keep_patches):
        torch = _torch()

        class _Wrapper(torch.nn.Module):
            def __init__(self):
                super().__init__()
                self.inner = inner
                keep = torch.as_tensor(keep_patches, dtype=torch.bool)
                self.register_buffer("keep", keep)

            def forward(self, hidden_states, attention_mask=None, **kwargs):
                b, t, c = hidden_states.shape
                heads = self.inner.num_heads
                head_dim = self.inner.head_dim
                q = self.inner.q_proj(hidden_states) * self.inner.scale
                k = self.inner.k_proj(hidden_states)
                v = self.inner.v_proj(hidden_states)
                q = q.view(b, t, heads, head_dim).transpose(1, 2)
                k = k.view(b, t, heads, head_dim).transpose(1, 2)
                v = v.view(b, t, heads, head_dim).transpose(1, 2)
                probs = torch.softmax(q @ k.transpose(-1, -2), dim=-1)
                col_keep = torch.ones(t, dtype=probs.dtype, device=probs.device)
                col_keep[1:] = self.keep.to(probs.dtype)
                probs = probs.clone()
                probs[:, :, 0, :] = probs[:, :, 0, :] * col_keep
                out = (probs @ v).transpose(1, 2).reshape(b, t, c)
                return self.inner.out_proj(out), None

        return _Wrapper()


class ClipEncoderBackend:
    def __init__(self, model=None, tokenizer=None):
        self._model = model
        self._tokenizer = tokenizer

    def _ensure(self, config):
        if self._model is None:
            from transformers import CLIPModel, CLIPTokenizerFast

            self._model = CLIPModel.from_pretrained(config.clip_model).eval()
            self._tokenizer = CLIPTokenizerFast.from_pretrained(config.clip_model)
        return self._model

    # --- preprocessing -------------------------------------------------

    def _pixel_values(self, image: np.ndarray):
        """(W, H, 3) u8 -> normalized (1, 3, S, S) tensor at the model size."""
        torch = _torch()
        from PIL import Image

        size = self._model.config.vision_config.image_size
        pil = Image.fromarray(np.transpose(image, (1, 0, 2)))  # PIL wants rows=H
        pil = pil.resize((size, size), Image.BILINEAR)
        arr = np.asarray(pil).astype(np.float32) / 255.0  # (S, S, 3)
        arr = (arr - np.array(_CLIP_MEAN, dtype=np.float32)) / np.array(
            _CLIP_STD, dtype=np.float32
        )
        return torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)

    def _patch_keep(self, mask: np.ndarray) -> np.ndarray:
        """Proposal mask -> boolean keep flags over the patch tokens."""
        vision = self._model.config.vision_config
        grid = vision.image_size // vision.patch_size
        W, H = mask.shape
        xs = np.linspace(0, W, grid + 1).astype(int)
        ys = np.linspace(0, H, grid + 1).astype(int)
        keep = np.zeros(grid * grid, dtype=bool)
        for row in range(grid):  # patch raster: row-major over image rows
            for col in range(grid):
                block = mask[
                    xs[col] : max(xs[col + 1], xs[col] + 1),
                    ys[row] : max(ys[row + 1], ys[row] + 1),
                ]
                keep[row * grid + col] = block.any()
        return keep

    # --- feature extraction ---------------------------------------------

    def _penultimate_cls(self, pixel_values, keep_patches=None):
        torch = _torch()
        model = self._model
        vision = model.vision_model
        originals = None
        if keep_patches is not None:
            originals = [layer.self_attn for layer in vision.encoder.layers]
            for layer in vision.encoder.layers:
                layer.self_attn = MaskedSelfAttention(layer.self_attn, keep_patches)
        try:
            with torch.no_grad():
                out = vision(pixel_values=pixel_values, output_hidden_states=True)
        finally:
            if originals is not None:
                for layer, module in zip(vision.encoder.layers, originals):
                    layer.self_attn = module
        cls_state = out.hidden_states[-2][:, 0]
        projected = model.visual_projection(vision.post_layernorm(cls_state))
        return projected[0].detach().cpu().numpy().astype(np.float32)

    def _text_vector(self, text: str):
        torch = _torch()
        model = self._model
        enc = self._tokenizer(text, return_tensors="pt")
        tokens = self._tokenizer.convert_ids_to_tokens(enc["input_ids"][0])
        root_word = head_word_index(words(text))
        root_pos = map_word_to_subtoken(tokens, root_word)
        with torch.no_grad():
            out = model.text_model(
                input_ids=enc["input_ids"], attention_mask=enc.get("attention_mask")
            )
            pooled = model.text_projection(out.pooler_output)[0]
            if root_pos is None:
                root_feat = pooled
            else:
                root_feat = model.text_projection(out.last_hidden_state[0, root_pos])
        pooled = pooled / pooled.norm()
        root_feat = root_feat / root_feat.norm()
        r = (pooled + root_feat) / 2.0
        r = r / r.norm()
        return r.detach().cpu().numpy().astype(np.float32), root_pos

    def export_embeddings(self, image, masks, pbias, text, root_word, config) -> EmbeddingResult:
        self._ensure(config)
        biased = np.clip(image.astype(np.float64) * pbias[:, :, None], 0, 255).astype(np.uint8)
        biased_pixels = self._pixel_values(biased)
        attn_vecs = []
        crop_vecs = []
        for mask in masks:
            keep = self._patch_keep(mask)
            attn_vecs.append(self._penultimate_cls(biased_pixels, keep_patches=keep))
            crop = image * mask[:, :, None].astype(np.uint8)
            crop_vecs.append(self._penultimate_cls(self._pixel_values(crop)))
        text_vec, root_pos = self._text_vector(text)
        return EmbeddingResult(
            text_vec=text_vec,
            attn_vecs=np.stack(attn_vecs),
            crop_vecs=np.stack(crop_vecs),
            metadata={
                "backend": "clip",
                "model": config.clip_model,
                "image_feature": "penultimate_cls_postln_projected",
                "attention_masking": "cls_row_zeroed_all_layers_no_renorm",
                "text_combination": "mean_of_normalized_then_normalize",
                "root_subtoken": root_pos,
            },
        )
