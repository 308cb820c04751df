"""Tensor container, sample manifests, and run configuration.

RDTF container layout (all integers little-endian):

    offset  size        field
    0       4           magic ``RDTF``
    4       1           version, currently 1
    5       1           ndim, 1..4
    6       4*ndim      dims, u32 each, all >= 1
    6+4n    1           dtype code: 0 = float32 LE, 1 = uint8
    ...     prod(dims)*itemsize   payload, row-major, last dim fastest

The payload byte count must equal ``prod(dims) * itemsize`` exactly.
Masks are stored as uint8 with values in {0, 1}, not bit-packed.

Manifests are JSON files; relative paths resolve against the manifest's
own directory so datasets stay relocatable.  A dataset is a directory of
manifests plus an index file ``dataset.json``:

    {"manifests": ["sample_000.json", "sample_001.json", ...]}
"""

from __future__ import annotations

import enum
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    DimOverflow,
    IoFailure,
    MissingField,
    RootIndexOutOfRange,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"RDTF"
VERSION = 1
DTYPE_F32 = 0
DTYPE_U8 = 1

_DTYPES = {DTYPE_F32: np.dtype("<f4"), DTYPE_U8: np.dtype("u1")}
_MAX_DIM = 0xFFFFFFFF


def _check_dims(shape: tuple[int, ...]) -> None:
    if not 1 <= len(shape) <= 4:
        raise DimOverflow(f"ndim must be 1..4, got {len(shape)}")
    for d in shape:
        if d < 1:
            raise DimOverflow(f"dims must be >= 1, got {shape}")
        if d > _MAX_DIM:
            raise DimOverflow(f"dim {d} exceeds u32 range")


def save_tensor(tensor: np.ndarray, path: str | Path) -> None:
    """Write an f32 or u8 array to ``path`` in the RDTF container."""
    arr = np.asarray(tensor)
    if arr.dtype == np.float32:
        code = DTYPE_F32
    elif arr.dtype == np.uint8:
        code = DTYPE_U8
    else:
        raise IoFailure(
            f"unsupported dtype {arr.dtype}; save float32 or uint8 arrays"
        )
    _check_dims(arr.shape)
    header = MAGIC + bytes([VERSION, arr.ndim])
    header += b"".join(struct.pack("<I", d) for d in arr.shape)
    header += bytes([code])
    payload = np.ascontiguousarray(arr.astype(_DTYPES[code], copy=False)).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _parse_header(blob: bytes, path: str | Path) -> tuple[tuple[int, ...], int, int]:
    """Return (dims, dtype code, payload offset) for a raw RDTF blob."""
    if len(blob) < 6 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: not an RDTF file")
    if blob[4] != VERSION:
        raise UnsupportedVersion(f"{path}: version {blob[4]}, expected {VERSION}")
    ndim = blob[5]
    if not 1 <= ndim <= 4:
        raise DimOverflow(f"{path}: ndim {ndim} outside 1..4")
    end = 6 + 4 * ndim
    if len(blob) < end + 1:
        raise TruncatedPayload(f"{path}: header cut short")
    dims = struct.unpack("<%dI" % ndim, blob[6:end])
    if any(d < 1 for d in dims):
        raise DimOverflow(f"{path}: zero dim in {dims}")
    code = blob[end]
    if code not in _DTYPES:
        raise UnsupportedVersion(f"{path}: unknown dtype code {code}")
    return dims, code, end + 1


def load_tensor(path: str | Path) -> np.ndarray:
    """Read an RDTF file back into a numpy array, bit-exact."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    dims, code, offset = _parse_header(blob, path)
    dtype = _DTYPES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    got = len(blob) - offset
    if got != expected:
        raise TruncatedPayload(
            f"{path}: payload is {got} bytes, dims {dims} require {expected}"
        )
    return np.frombuffer(blob, dtype=dtype, offset=offset).reshape(dims).copy()


def peek_tensor(path: str | Path) -> tuple[tuple[int, ...], int]:
    """Validate the header and byte budget of ``path`` without loading
    the payload.  Returns (dims, dtype code)."""
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as fh:
            head = fh.read(6 + 4 * 4 + 1)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    dims, code, offset = _parse_header(head, path)
    expected = int(np.prod(dims)) * _DTYPES[code].itemsize
    if size - offset != expected:
        raise TruncatedPayload(
            f"{path}: payload is {size - offset} bytes, dims {dims} require {expected}"
        )
    return dims, code


class Direction(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"


class Mode(enum.Enum):
    """Pipeline ablation modes."""

    G = "g"        # generative only, weight-free proposals
    GS = "gs"      # generative scoring over external proposals
    DS = "ds"      # discriminative scoring over external proposals
    FULL = "full"  # fused scoring over external proposals


DEFAULT_THRESHOLDS = tuple(i / 20 for i in range(1, 20))  # 0.05 .. 0.95


@dataclass
class RunConfig:
    alpha: float = 0.1
    beta: float = 0.3
    epsilon: float = 1e-8
    threshold_set: tuple[float, ...] = DEFAULT_THRESHOLDS
    mode: Mode = Mode.FULL
    # extensions
    percentile_thresholds: bool = False
    raw_dot: bool = False
    ramp_profile: str = "linear"
    direction_lexicon_path: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0,1], got {self.beta}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        thresholds = tuple(self.threshold_set)
        if any(not 0.0 < t < 1.0 for t in thresholds):
            raise ValueError(f"thresholds must lie in (0,1), got {thresholds}")
        if list(thresholds) != sorted(thresholds):
            raise ValueError("thresholds must be sorted ascending")
        self.threshold_set = thresholds
        if isinstance(self.mode, str):
            self.mode = Mode(self.mode.lower())
        if self.ramp_profile not in ("linear", "cosine"):
            raise ValueError(f"unknown ramp profile {self.ramp_profile!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "threshold_set": list(self.threshold_set),
            "mode": self.mode.value,
            "percentile_thresholds": self.percentile_thresholds,
            "raw_dot": self.raw_dot,
            "ramp_profile": self.ramp_profile,
        }


@dataclass
class EmbeddingRefs:
    """Paths to the text vector and per-proposal embedding pairs."""

    text_vec_path: Path
    pairs: list[tuple[Path, Path]]  # (attn_vec_path, crop_vec_path) per proposal
    dim: int


@dataclass
class SampleManifest:
    path: Path
    image_width: int
    image_height: int
    tokens: list[str]
    root_index: int | None = None
    directions: set[Direction] | None = None
    attention_path: Path = field(default=None)  # required; validated on load
    proposals_path: Path | None = None
    embeddings: EmbeddingRefs | None = None
    gt_mask_path: Path | None = None
    image_path: Path | None = None


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise MissingField(f"{where}: missing field '{key}'")
    value = doc[key]
    if kind is int and isinstance(value, bool):
        raise MissingField(f"{where}: field '{key}' must be an integer")
    if not isinstance(value, kind):
        raise MissingField(f"{where}: field '{key}' has wrong type")
    return value


def _check_binary_mask(path: Path) -> None:
    data = load_tensor(path)
    if data.max(initial=0) > 1:
        raise DimMismatch(f"{path}: u8 mask contains values outside {{0,1}}")


def load_manifest(path: str | Path) -> SampleManifest:
    """Parse and eagerly validate a sample manifest.

    All declared tensor files must exist with dims consistent with the
    manifest; u8 masks must be strictly {0,1}-valued.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MissingField(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise MissingField(f"{path}: manifest must be a JSON object")

    base = path.parent
    where = str(path)

    width = _require(doc, "image_width", int, where)
    height = _require(doc, "image_height", int, where)
    if width < 1 or height < 1:
        raise DimMismatch(f"{where}: image dims must be >= 1")
    tokens = _require(doc, "tokens", list, where)
    if not tokens or not all(isinstance(t, str) for t in tokens):
        raise MissingField(f"{where}: 'tokens' must be a non-empty list of strings")

    root_index = doc.get("root_index")
    if root_index is not None:
        if isinstance(root_index, bool) or not isinstance(root_index, int):
            raise MissingField(f"{where}: 'root_index' must be an integer")
        if not 0 <= root_index < len(tokens):
            raise RootIndexOutOfRange(
                f"{where}: root_index {root_index} outside 0..{len(tokens) - 1}"
            )

    directions = None
    if doc.get("directions") is not None:
        raw = _require(doc, "directions", list, where)
        directions = set()
        for item in raw:
            try:
                directions.add(Direction(item))
            except ValueError:
                raise MissingField(f"{where}: unknown direction {item!r}") from None

    def resolve(key: str) -> Path:
        rel = _require(doc, key, str, where)
        p = base / rel
        if not p.is_file():
            raise MissingField(f"{where}: '{key}' file not found: {p}")
        return p

    attention_path = resolve("attention_path")
    dims, code = peek_tensor(attention_path)
    if code != DTYPE_F32 or len(dims) != 4:
        raise DimMismatch(f"{where}: attention must be a 4-d f32 tensor, got {dims}")
    if dims[2] != len(tokens):
        raise DimMismatch(
            f"{where}: attention token dim {dims[2]} != {len(tokens)} tokens"
        )

    proposals_path = None
    n_proposals = None
    if doc.get("proposals_path") is not None:
        proposals_path = resolve("proposals_path")
        dims, code = peek_tensor(proposals_path)
        if code != DTYPE_U8 or len(dims) != 3:
            raise DimMismatch(f"{where}: proposals must be a 3-d u8 stack, got {dims}")
        if dims[1] != width or dims[2] != height:
            raise DimMismatch(
                f"{where}: proposal dims {dims[1]}x{dims[2]} != image {width}x{height}"
            )
        n_proposals = dims[0]
        _check_binary_mask(proposals_path)

    gt_mask_path = None
    if doc.get("gt_mask_path") is not None:
        gt_mask_path = resolve("gt_mask_path")
        dims, code = peek_tensor(gt_mask_path)
        if code != DTYPE_U8 or dims != (width, height):
            raise DimMismatch(f"{where}: gt mask dims {dims} != {width}x{height}")
        _check_binary_mask(gt_mask_path)

    image_path = None
    if doc.get("image_path") is not None:
        image_path = resolve("image_path")
        dims, code = peek_tensor(image_path)
        if code != DTYPE_U8 or dims != (width, height, 3):
            raise DimMismatch(f"{where}: image dims {dims} != {width}x{height}x3")

    embeddings = None
    if doc.get("embeddings") is not None:
        emb = _require(doc, "embeddings", dict, where)
        if proposals_path is None:
            raise MissingField(f"{where}: embeddings require 'proposals_path'")
        dim = _require(emb, "dim", int, where + " embeddings")
        text_rel = _require(emb, "text_vec_path", str, where + " embeddings")
        text_vec_path = base / text_rel
        if not text_vec_path.is_file():
            raise MissingField(f"{where}: text vector file not found: {text_vec_path}")
        dims, code = peek_tensor(text_vec_path)
        if code != DTYPE_F32 or dims != (dim,):
            raise DimMismatch(f"{where}: text vector dims {dims} != ({dim},)")
        entries = _require(emb, "proposals", list, where + " embeddings")
        if len(entries) != n_proposals:
            raise DimMismatch(
                f"{where}: {len(entries)} embedding pairs for {n_proposals} proposals"
            )
        pairs = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise MissingField(f"{where}: embeddings.proposals[{i}] must be an object")
            pair = []
            for key in ("attn_vec_path", "crop_vec_path"):
                rel = _require(entry, key, str, f"{where} embeddings.proposals[{i}]")
                p = base / rel
                if not p.is_file():
                    raise MissingField(f"{where}: '{key}' file not found: {p}")
                dims, code = peek_tensor(p)
                if code != DTYPE_F32 or dims != (dim,):
                    raise DimMismatch(f"{where}: {p} dims {dims} != ({dim},)")
                pair.append(p)
            pairs.append(tuple(pair))
        embeddings = EmbeddingRefs(text_vec_path=text_vec_path, pairs=pairs, dim=dim)

    return SampleManifest(
        path=path,
        image_width=width,
        image_height=height,
        tokens=[str(t) for t in tokens],
        root_index=root_index,
        directions=directions,
        attention_path=attention_path,
        proposals_path=proposals_path,
        embeddings=embeddings,
        gt_mask_path=gt_mask_path,
        image_path=image_path,
    )


def load_dataset_index(path: str | Path) -> list[Path]:
    """Read ``dataset.json`` (or a directory containing one) and return
    manifest paths in listed order."""
    path = Path(path)
    if path.is_dir():
        path = path / "dataset.json"
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MissingField(f"{path}: not valid JSON ({exc})") from exc
    entries = _require(doc, "manifests", list, str(path))
    if not all(isinstance(e, str) for e in entries):
        raise MissingField(f"{path}: 'manifests' must be a list of paths")
    return [path.parent / e for e in entries]
