"""Promptable-segmentor backend (torch + transformers SAM).

Automatic mask generation by prompting a point grid: every grid point
yields multimask candidates, candidates below the predicted-IoU cutoff
are dropped, logits are upsampled to image resolution, binarized at
probability 0.5, and exact duplicates removed.
"""

from __future__ import annotations

import numpy as np

from . import ProposalResult


class SamProposalBackend:
    def __init__(self, model=None):
        self._model = model

    def _ensure(self, config):
        if self._model is None:
            from transformers import SamModel

            self._model = SamModel.from_pretrained(config.sam_model).eval()
        return self._model

    def export_proposals(self, image, config) -> ProposalResult:
        import torch

        model = self._ensure(config)
        W, H = image.shape[:2]
        size = model.config.vision_config.image_size
        # (W, H, 3) u8 -> (1, 3, S, S) in [0, 1]; SAM's own normalization is
        # folded into from_pretrained checkpoints, a plain scale suffices here
        from PIL import Image

        pil = Image.fromarray(np.transpose(image, (1, 0, 2)))
        pil = pil.resize((size, size), Image.BILINEAR)
        arr = np.asarray(pil).astype(np.float32) / 255.0
        pixel_values = torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)

        n = config.sam_points_per_side
        coords = (np.arange(n) + 0.5) * size / n
        grid = [[[float(x), float(y)]] for y in coords for x in coords]
        input_points = torch.tensor([grid])  # (1, n*n, 1, 2) in model pixel space

        with torch.no_grad():
            out = model(
                pixel_values=pixel_values,
                input_points=input_points,
                multimask_output=True,
            )
        logits = out.pred_masks[0]          # (n_prompts, 3, h', w')
        scores = out.iou_scores[0]          # (n_prompts, 3)
        flat_logits = logits.reshape(-1, *logits.shape[-2:])
        flat_scores = scores.reshape(-1)

        masks = []
        seen = set()
        for i in range(flat_logits.shape[0]):
            if float(flat_scores[i]) < config.sam_iou_threshold:
                continue
            up = torch.nn.functional.interpolate(
                flat_logits[i][None, None], size=(H, W), mode="bilinear",
                align_corners=False,
            )[0, 0]
            prob = torch.sigmoid(up).cpu().numpy()
            mask = (prob >= 0.5).astype(np.uint8).T  # rows=H -> (W, H)
            total = int(mask.sum())
            if total == 0 or total == mask.size:
                continue
            key = mask.tobytes()
            if key in seen:
                continue
            seen.add(key)
            masks.append(mask)
        if not masks:
            raise ValueError("segmentor produced no usable masks")
        return ProposalResult(
            masks=np.stack(masks),
            metadata={
                "backend": "sam",
                "model": config.sam_model,
                "points_per_side": n,
                "iou_threshold": config.sam_iou_threshold,
                "binarization": "sigmoid>=0.5",
            },
        )
