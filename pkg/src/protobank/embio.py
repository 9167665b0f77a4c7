"""Binary embedding datasets: file reader/writer plus a synthetic generator.

The on-disk layout (all little-endian) is the interchange contract with any
feature exporter:

    magic   "OTS1"  (4 bytes)
    version u16     (= 1)
    dim     u32
    count   u64
    backbone_tag    u16 length + UTF-8 bytes
    split_tag       u16 length + UTF-8 bytes
    records         count x { example_id u64, label u32, dim x f32 }

Writing the same dataset twice yields identical bytes, and read(write(d))
reproduces d bit-exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .stream import LabeledEmbedding
from .vectors import Embedding

__all__ = ["EmbeddingDataset", "read_embeddings", "write_embeddings", "synth_gaussian"]

FILE_MAGIC = b"OTS1"
FILE_VERSION = 1

_FIXED_HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, record count


@dataclass(frozen=True)
class EmbeddingDataset:
    """A fully materialized embedding file: header metadata plus records."""

    dim: int
    backbone_tag: str
    split_tag: str
    records: tuple[LabeledEmbedding, ...]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValidationError(f"dataset dim must be >= 1, got {self.dim}")
        seen: set[int] = set()
        for rec in self.records:
            if rec.embedding.dim != self.dim:
                raise ValidationError(
                    f"record {rec.example_id} has dim {rec.embedding.dim}, dataset has {self.dim}"
                )
            if rec.example_id in seen:
                raise ValidationError(f"duplicate example id {rec.example_id}")
            # ids and labels must fit the unsigned on-disk fields
            if not 0 <= rec.example_id < 2**64:
                raise ValidationError(f"example id {rec.example_id} does not fit u64")
            if rec.label >= 2**32:
                raise ValidationError(f"label {rec.label} does not fit u32")
            seen.add(rec.example_id)

    def __len__(self) -> int:
        return len(self.records)


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("id", "<u8"), ("label", "<u4"), ("vec", "<f4", (dim,))])


def write_embeddings(dataset: EmbeddingDataset, path: str | Path) -> None:
    """Serialize a dataset; byte output is a pure function of the dataset."""
    backbone = dataset.backbone_tag.encode("utf-8")
    split = dataset.split_tag.encode("utf-8")
    if len(backbone) > 0xFFFF or len(split) > 0xFFFF:
        raise ValidationError("header tag longer than 65535 UTF-8 bytes")

    block = np.empty(len(dataset.records), dtype=_record_dtype(dataset.dim))
    for i, rec in enumerate(dataset.records):
        block[i] = (rec.example_id, rec.label, rec.embedding.values)

    with open(path, "wb") as fh:
        fh.write(_FIXED_HEADER.pack(FILE_MAGIC, FILE_VERSION, dataset.dim, len(dataset.records)))
        fh.write(struct.pack("<H", len(backbone)))
        fh.write(backbone)
        fh.write(struct.pack("<H", len(split)))
        fh.write(split)
        fh.write(block.tobytes())


def _read_tag(payload: bytes, offset: int, what: str) -> tuple[str, int]:
    if offset + 2 > len(payload):
        raise FormatError(f"file truncated in {what} length")
    (length,) = struct.unpack_from("<H", payload, offset)
    offset += 2
    if offset + length > len(payload):
        raise FormatError(f"file truncated in {what} bytes")
    try:
        tag = payload[offset : offset + length].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{what} is not valid UTF-8") from exc
    return tag, offset + length


def read_embeddings(path: str | Path) -> EmbeddingDataset:
    """Parse and validate an embedding file.

    FormatError covers structural damage (magic, version, truncation, trailing
    bytes); ValidationError covers well-formed files with bad payloads
    (NaN/Inf values, duplicate ids).
    """
    payload = Path(path).read_bytes()
    if len(payload) < _FIXED_HEADER.size:
        raise FormatError(f"{path}: truncated before header")
    magic, version, dim, count = _FIXED_HEADER.unpack_from(payload, 0)
    if magic != FILE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FILE_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim < 1:
        raise FormatError(f"{path}: header dim must be >= 1")

    backbone_tag, offset = _read_tag(payload, _FIXED_HEADER.size, "backbone_tag")
    split_tag, offset = _read_tag(payload, offset, "split_tag")

    rec_dtype = _record_dtype(dim)
    expected = offset + count * rec_dtype.itemsize
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated records (need {expected} bytes, have {len(payload)})")
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes after records")

    block = np.frombuffer(payload, dtype=rec_dtype, count=count, offset=offset)
    if count and not np.isfinite(block["vec"]).all():
        raise ValidationError(f"{path}: embedding payload contains NaN/Inf")

    records = tuple(
        LabeledEmbedding(
            example_id=int(block["id"][i]),
            label=int(block["label"][i]),
            embedding=Embedding(block["vec"][i]),
        )
        for i in range(count)
    )
    return EmbeddingDataset(dim=dim, backbone_tag=backbone_tag, split_tag=split_tag, records=records)


def _box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals from PCG64 uniforms via the Box-Muller transform.

    Draw order is pinned for reproducibility: 2*ceil(n/2) uniform doubles in
    one call, first half as radii, second half as angles, outputs interleaved
    cos/sin and truncated to n. The exact recipe is documented in the README.
    """
    half = (n + 1) // 2
    u = rng.random(2 * half)
    radius = np.sqrt(-2.0 * np.log1p(-u[:half]))
    angle = 2.0 * math.pi * u[half:]
    out = np.empty(2 * half, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:n]


def _lattice_center(class_index: int, dim: int, separation: float) -> np.ndarray:
    # Axis-aligned lattice: any two centers are at least `separation` apart.
    center = np.zeros(dim, dtype=np.float64)
    axis, ring = class_index % dim, class_index // dim
    center[axis] = separation * (ring + 1)
    return center


def synth_gaussian(
    classes: int,
    per_class: int,
    dim: int,
    separation: float,
    seed: int,
    split_tag: str = "train",
) -> EmbeddingDataset:
    """Sample a labeled dataset of isotropic unit-variance Gaussian blobs.

    Class centers sit on an axis-aligned lattice with pairwise distance of at
    least `separation` (in units of the noise sigma). Fully deterministic for
    a fixed seed; records are emitted class-major with sequential ids.
    """
    if classes < 2:
        raise ValidationError(f"need at least 2 classes, got {classes}")
    if per_class < 1:
        raise ValidationError(f"need at least 1 example per class, got {per_class}")
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    if not (separation > 0 and math.isfinite(separation)):
        raise ValidationError(f"separation must be a positive finite number, got {separation}")

    rng = np.random.Generator(np.random.PCG64(seed))
    records = []
    example_id = 0
    for cls in range(classes):
        center = _lattice_center(cls, dim, separation)
        for _ in range(per_class):
            sample = center + _box_muller(rng, dim)
            records.append(
                LabeledEmbedding(example_id=example_id, label=cls, embedding=Embedding(sample))
            )
            example_id += 1
    tag = f"synthetic-gaussian-v1(classes={classes},per_class={per_class},sep={separation},seed={seed})"
    return EmbeddingDataset(dim=dim, backbone_tag=tag, split_tag=split_tag, records=tuple(records))
