"""Per-class prototype memory bank.

Each class is summarized by the running mean of its feature vectors. The
accumulator is (float64 sum, count) so raw features never need to be kept:
the stream can deliver each pattern once and the mean is still exact up to
float rounding, independent of how the class's examples were chunked.
Finalized prototypes are served and serialized as float32, which makes the
per-class memory footprint exactly dim * 4 bytes.
"""

from __future__ import annotations

import struct
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EmptyBankError,
    EmptyGroupError,
    FormatError,
    ProtocolError,
    ValidationError,
)
from .vectors import Embedding

__all__ = ["ClassPrototype", "MemoryBank", "per_class_bytes"]

SNAPSHOT_MAGIC = b"OTSB"
SNAPSHOT_VERSION = 1

_HEADER = struct.Struct("<4sHII")  # magic, version, dim, class count
_CLASS_HEAD = struct.Struct("<IQ")  # class id, observation count


def per_class_bytes(dim: int) -> int:
    """Storage cost of one finalized prototype: dim float32 components."""
    return dim * 4


class ClassPrototype:
    """Streaming mean accumulator for one class."""

    __slots__ = ("class_id", "_sum", "count", "_mean32")

    def __init__(self, class_id: int, dim: int):
        self.class_id = class_id
        self._sum = np.zeros(dim, dtype=np.float64)
        self.count = 0
        self._mean32: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self._sum.shape[0]

    def add(self, feature: np.ndarray) -> None:
        self._sum += feature
        self.count += 1
        self._mean32 = None

    @property
    def mean(self) -> np.ndarray:
        """Finalized float32 class representative (read-only view)."""
        if self._mean32 is None:
            if self.count == 0:
                raise EmptyGroupError(f"class {self.class_id} has no observations")
            mean = (self._sum / self.count).astype(np.float32)
            mean.setflags(write=False)
            self._mean32 = mean
        return self._mean32

    def _restore_state(self, count: int, mean32: np.ndarray) -> None:
        # Rebuilds the accumulator from serialized state; the cached float32
        # mean is taken verbatim so round-trips are bit-exact.
        self.count = count
        self._sum = mean32.astype(np.float64) * count
        mean = mean32.copy()
        mean.setflags(write=False)
        self._mean32 = mean


class MemoryBank:
    """Map from class id to prototype; the only mutable state of the whole pipeline."""

    def __init__(self) -> None:
        self._prototypes: dict[int, ClassPrototype] = {}
        self._dim: int | None = None

    @property
    def dim(self) -> int | None:
        """Feature dimension, fixed at first insertion (None while empty)."""
        return self._dim

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(self._prototypes)

    def __len__(self) -> int:
        return len(self._prototypes)

    def __contains__(self, class_id: int) -> bool:
        return class_id in self._prototypes

    def __iter__(self) -> Iterator[ClassPrototype]:
        return iter(self._prototypes.values())

    def prototype(self, class_id: int) -> ClassPrototype:
        return self._prototypes[class_id]

    def observe_class_group(
        self,
        class_id: int,
        features: Sequence[Embedding],
        strict_nc: bool = True,
    ) -> None:
        """Fold one class group into the bank (the whole "training" step).

        Features are accumulated one by one, in order, into the float64 sum;
        no other state exists, so nothing resembling a parameter update ever
        happens. Under strict_nc a class id that already has a prototype is a
        protocol violation; otherwise the group merges into the running mean.
        """
        if class_id < 0:
            raise ValidationError(f"class id must be >= 0, got {class_id}")
        if not features:
            raise EmptyGroupError(f"empty feature group for class {class_id}")
        dim = features[0].dim
        for f in features:
            if f.dim != dim:
                raise DimensionError(f"mixed dims in class {class_id}: {f.dim} vs {dim}")
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise DimensionError(f"bank dim is {self._dim}, group has dim {dim}")

        proto = self._prototypes.get(class_id)
        if proto is not None and strict_nc:
            raise ProtocolError(f"class {class_id} reappeared under the strict NC protocol")
        if proto is None:
            proto = ClassPrototype(class_id, dim)
            self._prototypes[class_id] = proto
        for f in features:
            proto.add(f.values.astype(np.float64))

    def memory_bytes(self) -> int:
        """Exact footprint of the finalized prototypes: dim * 4 bytes per class."""
        if self._dim is None:
            return 0
        return per_class_bytes(self._dim) * len(self._prototypes)

    def memory_kib(self) -> float:
        return self.memory_bytes() / 1024

    def snapshot(self) -> bytes:
        """Serialize to bytes; classes are written in ascending id order."""
        if not self._prototypes:
            raise EmptyBankError("cannot snapshot an empty bank")
        assert self._dim is not None
        out = [_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self._dim, len(self._prototypes))]
        for class_id in sorted(self._prototypes):
            proto = self._prototypes[class_id]
            out.append(_CLASS_HEAD.pack(class_id, proto.count))
            out.append(proto.mean.astype("<f4").tobytes())
        return b"".join(out)

    @classmethod
    def restore(cls, payload: bytes) -> "MemoryBank":
        """Rebuild a bank from snapshot bytes; means round-trip bit-exactly."""
        if len(payload) < _HEADER.size:
            raise FormatError("snapshot truncated before header")
        magic, version, dim, n_classes = _HEADER.unpack_from(payload, 0)
        if magic != SNAPSHOT_MAGIC:
            raise FormatError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise FormatError(f"unsupported snapshot version {version}")
        if dim < 1:
            raise FormatError("snapshot header has dim < 1")
        if n_classes < 1:
            raise FormatError("snapshot header has no classes")

        expected = _HEADER.size + n_classes * (_CLASS_HEAD.size + dim * 4)
        if len(payload) != expected:
            raise FormatError(
                f"snapshot length {len(payload)} != expected {expected} for header"
            )

        bank = cls()
        bank._dim = dim
        offset = _HEADER.size
        for _ in range(n_classes):
            class_id, count = _CLASS_HEAD.unpack_from(payload, offset)
            offset += _CLASS_HEAD.size
            if count < 1:
                raise FormatError(f"class {class_id} has count 0 in snapshot")
            if class_id in bank._prototypes:
                raise FormatError(f"duplicate class {class_id} in snapshot")
            mean = np.frombuffer(payload, dtype="<f4", count=dim, offset=offset).astype(
                np.float32
            )
            offset += dim * 4
            if not np.isfinite(mean).all():
                raise FormatError(f"class {class_id} mean contains NaN/Inf")
            proto = ClassPrototype(class_id, dim)
            proto._restore_state(count, mean)
            bank._prototypes[class_id] = proto
        return bank
