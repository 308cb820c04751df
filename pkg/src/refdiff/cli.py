"""Command-line entry point.

Subcommands: ``segment``, ``evaluate``, ``gen-fixtures``, ``emit-pbias``,
``overlay``.  Every engine error maps to a stable nonzero exit code and
a machine-readable stderr line of the form::

    refdiff: error <code> <ErrorClass>: <message>

so shell harnesses can branch on the failure class.  ``evaluate``
parallelism comes from ``--jobs`` or the ``REFDIFF_THREADS`` variable;
reports are byte-identical regardless of worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DimMismatch, IoFailure, RefdiffError
from .evaluation import emit_report, evaluate_dataset
from .fixtures import FixtureSpec, gen_dataset
from .io import Mode, RunConfig, load_manifest, load_tensor, save_tensor
from .pipeline import segment_sample
from .refexpr import detect_direction, load_direction_lexicon, tokenize
from .scoring import build_positional_bias


def _build_config(args, mode_required=True) -> RunConfig:
    kwargs = {}
    if getattr(args, "mode", None) is not None:
        kwargs["mode"] = Mode(args.mode)
    elif mode_required:
        raise IoFailure("--mode is required")
    if getattr(args, "alpha", None) is not None:
        kwargs["alpha"] = args.alpha
    if getattr(args, "beta", None) is not None:
        kwargs["beta"] = args.beta
    if getattr(args, "jobs", None) is not None:
        kwargs["jobs"] = args.jobs
    else:
        env = os.environ.get("REFDIFF_THREADS")
        if env:
            kwargs["jobs"] = int(env)
    return RunConfig(**kwargs)


def _cmd_segment(args) -> int:
    config = _build_config(args)
    manifest = load_manifest(args.manifest)
    selection = segment_sample(manifest, config)
    out = Path(args.out)
    save_tensor(np.asarray(selection.selected_mask, dtype=np.uint8), out)
    i = selection.selected_index
    summary = {
        "selected_index": i,
        "s_gen": None if selection.s_gen is None else selection.s_gen[i],
        "s_dis": None if selection.s_dis is None else selection.s_dis[i],
        "s": selection.s[i],
        "mask_path": str(out),
    }
    print(json.dumps(summary))
    return 0


def _cmd_evaluate(args) -> int:
    config = _build_config(args)
    report = evaluate_dataset(args.dataset, config)
    text = emit_report(report, args.report)
    if args.report is None:
        sys.stdout.write(text)
    return 0


def _cmd_gen_fixtures(args) -> int:
    spec = FixtureSpec(
        seed=args.seed,
        image_width=args.width,
        image_height=args.height,
        latent_width=args.latent_width,
        latent_height=args.latent_height,
        n_tokens=args.tokens,
        n_heads=args.heads,
        embed_dim=args.dim,
        n_samples=args.samples,
        n_distractors=args.distractors,
        noise_level=args.noise,
    )
    index_path = gen_dataset(spec, args.out)
    print(index_path)
    return 0


def _cmd_emit_pbias(args) -> int:
    lexicon = None
    if args.lexicon is not None:
        lexicon = load_direction_lexicon(args.lexicon)
    if args.manifest is not None:
        manifest = load_manifest(args.manifest)
        width, height = manifest.image_width, manifest.image_height
        if manifest.directions is not None:
            directions = manifest.directions
        else:
            directions = detect_direction(manifest.tokens, lexicon)
    else:
        if args.width is None or args.height is None:
            raise IoFailure("emit-pbias needs --manifest or --width/--height")
        width, height = args.width, args.height
        if args.expression is not None:
            directions = detect_direction(tokenize(args.expression), lexicon)
        else:
            directions = set()
    bias = build_positional_bias(directions, width, height, profile=args.profile)
    save_tensor(bias.data.astype(np.float32), args.out)
    print(json.dumps({
        "directions": sorted(d.value for d in directions),
        "width": width,
        "height": height,
        "out": str(args.out),
    }))
    return 0


def _gt_outline(gt: np.ndarray) -> np.ndarray:
    """Boundary pixels of a (W, H) binary mask: set pixels with a clear
    4-neighbor or on the image edge."""
    fg = gt.astype(bool)
    interior = np.zeros_like(fg)
    if fg.shape[0] > 2 and fg.shape[1] > 2:
        interior[1:-1, 1:-1] = (
            fg[1:-1, 1:-1]
            & fg[:-2, 1:-1]
            & fg[2:, 1:-1]
            & fg[1:-1, :-2]
            & fg[1:-1, 2:]
        )
    return fg & ~interior


def _cmd_overlay(args) -> int:
    manifest = load_manifest(args.manifest)
    W, H = manifest.image_width, manifest.image_height
    mask = load_tensor(args.mask)
    if mask.shape != (W, H):
        raise DimMismatch(f"mask dims {mask.shape} != image {W}x{H}")
    if manifest.image_path is not None:
        base = load_tensor(manifest.image_path)
    else:
        base = np.full((W, H, 3), 128, dtype=np.uint8)
    img = base.astype(np.uint16)
    blue = np.array([0, 0, 255], dtype=np.uint16)
    fg = mask.astype(bool)
    img[fg] = (img[fg] + blue) // 2  # 50% blend toward blue
    if manifest.gt_mask_path is not None:
        gt = load_tensor(manifest.gt_mask_path)
        img[_gt_outline(gt)] = np.array([0, 255, 0], dtype=np.uint16)
    img = img.astype(np.uint8)
    raster = np.transpose(img, (1, 0, 2))  # PPM rows are image rows
    try:
        with open(args.out, "wb") as fh:
            fh.write(f"P6\n{W} {H}\n255\n".encode("ascii"))
            fh.write(raster.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {args.out}: {exc}") from exc
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refdiff",
        description="Zero-shot referring segmentation over exported tensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="select the referring mask for one sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", default="selected_mask.rdtf")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("evaluate", help="run a dataset and report mIoU/oIoU")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    p.add_argument("--report")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gen-fixtures", help="write a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--latent-width", type=int, default=16)
    p.add_argument("--latent-height", type=int, default=16)
    p.add_argument("--tokens", type=int, default=4)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--distractors", type=int, default=2)
    p.set_defaults(func=_cmd_gen_fixtures)

    p = sub.add_parser("emit-pbias", help="write the positional-bias matrix")
    p.add_argument("--manifest")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--expression")
    p.add_argument("--lexicon")
    p.add_argument("--profile", choices=["linear", "cosine"], default="linear")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_emit_pbias)

    p = sub.add_parser("overlay", help="render a mask over the image as PPM")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_overlay)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except RefdiffError as exc:
        print(
            f"refdiff: error {exc.exit_code} {type(exc).__name__}: {exc}",
            file=sys.stderr,
        )
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
