"""Incremental writer for the OTS1 embedding file format.

Layout (little-endian): magic "OTS1", version u16 = 1, dim u32, count u64,
backbone_tag (u16 length + UTF-8), split_tag (u16 length + UTF-8), then per
record: example_id u64, label u32, dim float32 values. This byte contract is
the only coupling to the downstream consumer.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"OTS1"
VERSION = 1

_FIXED_HEADER = struct.Struct("<4sHIQ")
_RECORD_HEAD = struct.Struct("<QI")


class EmbeddingWriter:
    """Append-only writer; the record count is fixed when the header is written."""

    def __init__(self, path: str | Path, dim: int, count: int, backbone_tag: str, split_tag: str):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.count = count
        self.written = 0
        self._fh = open(path, "wb")
        self._fh.write(_FIXED_HEADER.pack(MAGIC, VERSION, dim, count))
        for tag in (backbone_tag, split_tag):
            raw = tag.encode("utf-8")
            if len(raw) > 0xFFFF:
                self._fh.close()
                raise ValueError("header tag longer than 65535 UTF-8 bytes")
            self._fh.write(struct.pack("<H", len(raw)))
            self._fh.write(raw)

    def write_batch(self, example_ids, labels, features: np.ndarray) -> None:
        """Append a batch of records; features must be (n, dim) float-like."""
        feats = np.ascontiguousarray(features, dtype="<f4")
        if feats.ndim != 2 or feats.shape[1] != self.dim:
            raise ValueError(f"expected (n, {self.dim}) features, got {feats.shape}")
        if not np.isfinite(feats).all():
            raise ValueError("features contain NaN/Inf")
        for eid, label, vec in zip(example_ids, labels, feats, strict=True):
            self._fh.write(_RECORD_HEAD.pack(int(eid), int(label)))
            self._fh.write(vec.tobytes())
            self.written += 1
        if self.written > self.count:
            raise ValueError(f"wrote {self.written} records, header promised {self.count}")

    def close(self) -> None:
        try:
            if self.written != self.count:
                raise ValueError(
                    f"header promised {self.count} records but {self.written} were written"
                )
        finally:
            self._fh.close()

    def __enter__(self) -> "EmbeddingWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()
