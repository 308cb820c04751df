"""Exporter command line.

Each command takes ``--config JSON`` (defaults apply when omitted) and
writes engine-format files.  ``export-sample`` produces a complete
manifest, shelling out to the engine's ``emit-pbias`` for the
positional-bias pass.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import get_backend
from .config import ExporterConfig
from .export import (
    export_attention,
    export_embeddings,
    export_proposals,
    export_sample,
    load_image,
)
from .rdtf import read_tensor


def _config(args) -> ExporterConfig:
    config = ExporterConfig.from_json(args.config) if args.config else ExporterConfig()
    if args.backend:
        config.backend = args.backend
    return config


def _cmd_attention(args) -> int:
    config = _config(args)
    image = load_image(args.image)
    result = export_attention(image, args.text, config, Path(args.out))
    print(json.dumps({"tokens": result.tokens, "root_index": result.root_index,
                      "out": args.out}))
    return 0


def _cmd_proposals(args) -> int:
    config = _config(args)
    image = load_image(args.image)
    result = export_proposals(image, config, Path(args.out))
    print(json.dumps({"count": int(result.masks.shape[0]), "out": args.out}))
    return 0


def _cmd_embeddings(args) -> int:
    config = _config(args)
    image = load_image(args.image)
    masks = read_tensor(args.proposals)
    pbias = read_tensor(args.pbias).astype(float)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, doc = export_embeddings(image, masks, pbias, args.text, config, out_dir, args.stem)
    print(json.dumps(doc))
    return 0


def _cmd_sample(args) -> int:
    config = _config(args)
    manifest = export_sample(
        args.image, args.text, args.out_dir, config,
        stem=args.stem, engine_cmd=args.engine_cmd,
    )
    print(manifest)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="refdiff-export",
        description="Export model tensors into the engine's file formats",
    )
    parser.add_argument("--config", help="ExporterConfig JSON path")
    parser.add_argument("--backend", choices=["synthetic", "models"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-attention", help="cross-attention stack for one sample")
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attention)

    p = sub.add_parser("export-proposals", help="segmentor mask stack")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_proposals)

    p = sub.add_parser("export-embeddings", help="per-proposal embedding pairs + text vector")
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--proposals", required=True)
    p.add_argument("--pbias", required=True, help="engine emit-pbias output")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stem", default="sample")
    p.set_defaults(func=_cmd_embeddings)

    p = sub.add_parser("export-sample", help="full manifest for one image/text pair")
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stem", default="sample")
    p.add_argument("--engine-cmd", default="refdiff")
    p.set_defaults(func=_cmd_sample)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface model/backend failures verbatim
        print(f"refdiff-export: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
