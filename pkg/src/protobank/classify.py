"""Nearest-prototype classification (1-nn over class means).

Prediction scans every eligible prototype, so results are exact; banks hold
at most a few hundred prototypes and need nothing cleverer. Ties break
toward the lowest class id to keep predictions deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import AbstractSet, Mapping, Sequence

import numpy as np

from .bank import MemoryBank
from .errors import DegenerateVectorError, DimensionError, EmptyBankError, ValidationError
from .stream import LabeledEmbedding
from .vectors import Embedding, Metric

__all__ = ["Prediction", "EvaluationReport", "predict", "predict_task_aware", "evaluate"]


@dataclass(frozen=True, slots=True)
class Prediction:
    """Winner of a nearest-prototype scan plus free diagnostics."""

    predicted_class: int
    distance_or_score: float  # L2 distance of the winner, or its cosine similarity
    runner_up_class: int | None
    margin: float  # |winner score - runner-up score|; 0.0 when there is no runner-up


def _scores(bank: MemoryBank, query: Embedding, metric: Metric, class_ids) -> list[tuple[int, float]]:
    q = query.values.astype(np.float64)
    if metric is Metric.COSINE:
        qn = math.sqrt(float(np.dot(q, q)))
        if qn == 0.0:
            raise DegenerateVectorError("cosine prediction undefined for zero-norm query")
    out = []
    for class_id in class_ids:
        p = bank.prototype(class_id).mean.astype(np.float64)
        if metric is Metric.L2:
            diff = q - p
            out.append((class_id, math.sqrt(float(np.dot(diff, diff)))))
        else:
            pn = math.sqrt(float(np.dot(p, p)))
            if pn == 0.0:
                raise DegenerateVectorError(
                    f"cosine prediction undefined: prototype {class_id} has zero norm"
                )
            sim = float(np.dot(q, p)) / (qn * pn)
            out.append((class_id, min(1.0, max(-1.0, sim))))
    return out


def _pick(scored: list[tuple[int, float]], metric: Metric) -> Prediction:
    # L2 minimizes, cosine maximizes; lowest class id wins exact ties.
    if metric is Metric.L2:
        key = lambda item: (item[1], item[0])
    else:
        key = lambda item: (-item[1], item[0])
    ranked = sorted(scored, key=key)
    winner_class, winner_score = ranked[0]
    if len(ranked) == 1:
        return Prediction(winner_class, winner_score, None, 0.0)
    runner_class, runner_score = ranked[1]
    return Prediction(winner_class, winner_score, runner_class, abs(runner_score - winner_score))


def predict(bank: MemoryBank, query: Embedding, metric: Metric = Metric.L2) -> Prediction:
    """Classify a query as the class of its nearest prototype."""
    if len(bank) == 0:
        raise EmptyBankError("cannot predict with an empty bank")
    if query.dim != bank.dim:
        raise DimensionError(f"query dim {query.dim} != bank dim {bank.dim}")
    return _pick(_scores(bank, query, metric, sorted(bank.class_ids)), metric)


def predict_task_aware(
    bank: MemoryBank,
    query: Embedding,
    allowed_classes: AbstractSet[int],
    metric: Metric = Metric.L2,
) -> Prediction:
    """predict() restricted to prototypes whose class is in allowed_classes."""
    if query.dim != bank.dim:
        raise DimensionError(f"query dim {query.dim} != bank dim {bank.dim}")
    eligible = sorted(c for c in bank.class_ids if c in allowed_classes)
    if not eligible:
        raise EmptyBankError("no prototype matches the allowed class set")
    return _pick(_scores(bank, query, metric, eligible), metric)


@dataclass
class EvaluationReport:
    """Top-1 accuracy with per-class hit/total counts."""

    total: int
    hits: int
    per_class: dict[int, tuple[int, int]]  # label -> (hits, total)
    missing_classes: tuple[int, ...]  # test labels with no prototype in the bank

    @property
    def accuracy(self) -> float:
        return self.hits / self.total


def evaluate(
    bank: MemoryBank,
    examples: Sequence[LabeledEmbedding],
    metric: Metric = Metric.L2,
    task_classes: Mapping[int, AbstractSet[int]] | None = None,
) -> EvaluationReport:
    """Score a labeled test set against the bank.

    task_classes switches on task-aware mode: each example is classified
    among the classes of its own task only. Labels missing from the bank (or
    from task_classes) are still scored; they simply cannot be hit and are
    flagged in the report.
    """
    if not examples:
        raise ValidationError("test set is empty")
    hits = 0
    per_class: dict[int, list[int]] = {}
    missing: set[int] = set()
    bank_classes = set(bank.class_ids)
    for ex in examples:
        counts = per_class.setdefault(ex.label, [0, 0])
        counts[1] += 1
        if ex.label not in bank_classes:
            missing.add(ex.label)
        allowed = task_classes.get(ex.label) if task_classes is not None else None
        if allowed is not None and bank_classes.isdisjoint(allowed):
            continue  # nothing eligible: a miss, not an error
        if allowed is not None:
            pred = predict_task_aware(bank, ex.embedding, allowed, metric)
        else:
            pred = predict(bank, ex.embedding, metric)
        if pred.predicted_class == ex.label:
            hits += 1
            counts[0] += 1
    return EvaluationReport(
        total=len(examples),
        hits=hits,
        per_class={label: (h, t) for label, (h, t) in sorted(per_class.items())},
        missing_classes=tuple(sorted(missing)),
    )
