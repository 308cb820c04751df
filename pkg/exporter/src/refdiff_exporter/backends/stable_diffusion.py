"""Diffusion cross-attention capture (torch + diffusers).

Noises the encoded image to the configured step, runs a single
denoising pass, and records post-softmax cross-attention from the
configured decoder resolutions.  Coarser grids are upsampled to the
finest captured grid, layers are averaged per head, and the result is
written as (w, h, tokens, heads).

The scheduler indexing behind "step t" is not standardized; this
backend uses the scheduler's own timestep array position ``t`` counted
from the clean end and records that choice in the metadata.
"""

from __future__ import annotations

import numpy as np

from ..text import head_word_index, map_word_to_subtoken, words
from . import AttentionResult


class _CrossAttentionRecorder:
    """diffusers attention processor that stores softmax(QK^T) per call."""

    def __init__(self, store, name):
        self.store = store
        self.name = name

    def __call__(self, attn, hidden_states, encoder_hidden_states=None,
                 attention_mask=None, **kwargs):
        import torch

        residual = hidden_states
        is_cross = encoder_hidden_states is not None
        context = encoder_hidden_states if is_cross else hidden_states
        query = attn.to_q(hidden_states)
        key = attn.to_k(context)
        value = attn.to_v(context)
        query = attn.head_to_batch_dim(query)
        key = attn.head_to_batch_dim(key)
        value = attn.head_to_batch_dim(value)
        probs = attn.get_attention_scores(query, key, attention_mask)
        if is_cross:
            self.store.setdefault(self.name, []).append(probs.detach().cpu())
        out = torch.bmm(probs, value)
        out = attn.batch_to_head_dim(out)
        out = attn.to_out[0](out)
        out = attn.to_out[1](out)
        if attn.residual_connection:
            out = out + residual
        return out


class StableDiffusionAttentionBackend:
    def __init__(self, pipeline=None):
        self._pipe = pipeline

    def _ensure(self, config):
        if self._pipe is None:
            from diffusers import StableDiffusionPipeline

            self._pipe = StableDiffusionPipeline.from_pretrained(config.diffusion_model)
            self._pipe.unet.eval()
            self._pipe.vae.eval()
        return self._pipe

    @staticmethod
    def _wanted_resolutions(config):
        out = set()
        for layer_id in config.attention_layers:
            out.add(int(layer_id.split(":")[-1]))
        return out

    def export_attention(self, image, text, config) -> AttentionResult:
        import torch

        pipe = self._ensure(config)
        tokenizer = pipe.tokenizer
        device = pipe.unet.device

        # resize-and-pad to the working resolution, then encode
        from PIL import Image

        res = config.image_resolution
        W, H = image.shape[:2]
        scale = res / max(W, H)
        new_w, new_h = max(1, round(W * scale)), max(1, round(H * scale))
        pil = Image.fromarray(np.transpose(image, (1, 0, 2))).resize(
            (new_w, new_h), Image.BILINEAR
        )
        canvas = Image.new("RGB", (res, res))
        canvas.paste(pil, (0, 0))
        arr = np.asarray(canvas).astype(np.float32) / 127.5 - 1.0
        pixels = torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0).to(device)

        with torch.no_grad():
            latents = pipe.vae.encode(pixels).latent_dist.mode()
            latents = latents * pipe.vae.config.scaling_factor
            scheduler = pipe.scheduler
            scheduler.set_timesteps(scheduler.config.num_train_timesteps)
            timestep = scheduler.timesteps[-config.noise_step]
            generator = torch.Generator(device="cpu").manual_seed(0)
            noise = torch.randn(latents.shape, generator=generator).to(device)
            noisy = scheduler.add_noise(latents, noise, timestep[None])

            enc = tokenizer(
                text, padding="max_length", max_length=tokenizer.model_max_length,
                truncation=True, return_tensors="pt",
            )
            text_states = pipe.text_encoder(enc.input_ids.to(device))[0]

            store: dict[str, list] = {}
            previous = pipe.unet.attn_processors
            processors = {}
            for name in previous:
                if name.endswith("attn2.processor"):
                    processors[name] = _CrossAttentionRecorder(store, name)
                else:
                    processors[name] = previous[name]
            pipe.unet.set_attn_processor(processors)
            try:
                pipe.unet(noisy, timestep, encoder_hidden_states=text_states)
            finally:
                pipe.unet.set_attn_processor(previous)

        tokens_full = tokenizer.convert_ids_to_tokens(enc.input_ids[0])
        eos = tokenizer.eos_token
        l = tokens_full.index(eos) + 1 if eos in tokens_full else len(tokens_full)
        tokens = tokens_full[:l]

        wanted = self._wanted_resolutions(config)
        finest = max(wanted)
        per_layer = []
        heads = None
        for name, calls in store.items():
            probs = calls[0]  # (heads, q, kv) for batch size 1
            q = probs.shape[1]
            side = int(round(q ** 0.5))
            if side * side != q or side not in wanted:
                continue
            heads = probs.shape[0]
            maps = probs[:, :, :l].reshape(heads, side, side, l)  # rows, cols
            if side != finest:
                import torch.nn.functional as functional

                flat = maps.permute(0, 3, 1, 2).reshape(heads * l, 1, side, side)
                flat = functional.interpolate(
                    flat, size=(finest, finest), mode="bilinear", align_corners=False
                )
                maps = flat.reshape(heads, l, finest, finest).permute(0, 2, 3, 1)
            per_layer.append(maps)
        if not per_layer:
            raise ValueError(
                f"no cross-attention captured at resolutions {sorted(wanted)}"
            )
        mean = sum(per_layer) / len(per_layer)          # (heads, rows, cols, l)
        stack = mean.permute(2, 1, 3, 0).numpy()        # (w=cols, h=rows, l, heads)

        root_word = head_word_index(words(text))
        root_pos = map_word_to_subtoken(tokens, root_word)
        return AttentionResult(
            stack=stack.astype(np.float32),
            tokens=tokens,
            root_index=root_pos,
            metadata={
                "backend": "stable_diffusion",
                "model": config.diffusion_model,
                "noise_step": config.noise_step,
                "scheduler_indexing": "timesteps[-t] (t from the clean end)",
                "layers_captured": len(per_layer),
                "resolutions": sorted(wanted),
                "heads": heads,
                "latent_seed": 0,
            },
        )
