"""Fixed-dimension feature vectors and the distance/similarity metrics over them.

Vectors are stored as float32 (matching on-disk and in-bank precision) while
all metric arithmetic runs in float64.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

from .errors import DegenerateVectorError, DimensionError, ValidationError

__all__ = [
    "Embedding",
    "Metric",
    "l2_distance",
    "cosine_similarity",
    "unit_normalize",
]


class Metric(enum.Enum):
    """Which score the nearest-prototype classifier minimizes/maximizes."""

    L2 = "l2"
    COSINE = "cosine"


class Embedding:
    """Immutable feature vector: float32 storage, finite components, dim >= 1."""

    __slots__ = ("values",)

    values: np.ndarray

    def __init__(self, values: Iterable[float] | np.ndarray):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValidationError(f"embedding must be a non-empty 1-d vector, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("embedding contains NaN or Inf")
        if arr.base is not None or arr is values:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Embedding is immutable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"Embedding(dim={self.dim})"


def _check_dims(a: Embedding, b: Embedding) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def l2_distance(a: Embedding, b: Embedding) -> float:
    """Euclidean distance between two embeddings of equal dimension."""
    _check_dims(a, b)
    diff = a.values.astype(np.float64) - b.values.astype(np.float64)
    return float(math.sqrt(float(np.dot(diff, diff))))


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1].

    Raises DegenerateVectorError for zero-norm operands; rounding overshoot
    is clamped so callers may safely take acos.
    """
    _check_dims(a, b)
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = math.sqrt(float(np.dot(av, av)))
    nb = math.sqrt(float(np.dot(bv, bv)))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity undefined for zero-norm vector")
    return min(1.0, max(-1.0, float(np.dot(av, bv)) / (na * nb)))


def unit_normalize(a: Embedding) -> Embedding:
    """Scale an embedding to unit Euclidean norm, preserving direction."""
    av = a.values.astype(np.float64)
    norm = math.sqrt(float(np.dot(av, av)))
    if norm == 0.0:
        raise DegenerateVectorError("cannot normalize a zero-norm vector")
    return Embedding(av / norm)
