"""End-to-end pipeline: stream the tasks, fill the bank, score the test set.

Training is a single sequential pass over the task stream. After each task
the bank is frozen in place and scored against every test split seen so far,
which yields the lower-triangular accuracy matrix of the run report:
row i holds the accuracy on test splits 0..i after training task i.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from typing import Mapping

from .bank import MemoryBank
from .classify import EvaluationReport, evaluate
from .cluster import pseudo_class_id, pseudo_group
from .embio import EmbeddingDataset
from .errors import ProtocolError, ValidationError
from .stream import Task, TaskStream, group_by_class, make_nc_scenario, validate_stream
from .vectors import Metric, unit_normalize

__all__ = [
    "RunConfig",
    "RunReport",
    "EvaluationRow",
    "run_training",
    "run_evaluation",
    "run_benchmark",
    "report_to_json",
    "render_report",
]

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; echoed verbatim into the report."""

    train_path: str | None = None
    test_path: str | None = None
    n_tasks: int = 1
    metric: Metric = Metric.L2
    mode: str = "agnostic"  # "agnostic" | "aware"
    strict_nc: bool = True
    normalize: bool = False
    unsupervised: bool = False
    k: int | None = None
    seed: int = 0
    out_path: str | None = None

    def __post_init__(self) -> None:
        if self.n_tasks < 1:
            raise ValidationError(f"n_tasks must be >= 1, got {self.n_tasks}")
        if self.mode not in ("agnostic", "aware"):
            raise ValidationError(f"mode must be 'agnostic' or 'aware', got {self.mode!r}")
        if self.unsupervised and (self.k is None or self.k < 1):
            raise ValidationError("unsupervised mode requires k >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["metric"] = self.metric.value
        return d


@dataclass
class EvaluationRow:
    """One accuracy-matrix row: per-task reports plus the pooled report."""

    per_task: list[EvaluationReport]
    overall: EvaluationReport

    @property
    def accuracies(self) -> list[float]:
        return [r.accuracy for r in self.per_task]


@dataclass
class RunReport:
    """Deterministic result of a benchmark run plus wall-clock timing."""

    config: dict
    n_tasks: int
    n_classes: int
    dim: int
    class_order: list[int]
    accuracy_matrix: list[list[float]]
    final_average_accuracy: float  # mean over the last matrix row
    final_accuracy: float  # pooled top-1 accuracy on the whole test set
    per_class: dict[int, tuple[int, int]]
    missing_classes: list[int]
    memory_bytes: int
    memory_kib: float
    train_seconds: float = field(default=0.0)
    eval_seconds: float = field(default=0.0)


def _normalized_task(task: Task) -> Task:
    return Task(
        task_id=task.task_id,
        class_ids=task.class_ids,
        examples=tuple(
            dataclasses.replace(ex, embedding=unit_normalize(ex.embedding))
            for ex in task.examples
        ),
    )


def _train_task(bank: MemoryBank, task: Task, config: RunConfig) -> None:
    """One Alg-style training step: group the task, fold groups into the bank."""
    if config.normalize:
        task = _normalized_task(task)
    if config.unsupervised:
        assert config.k is not None
        groups = pseudo_group(task, config.k, seed=config.seed + task.task_id).groups
    else:
        groups = group_by_class(task)
    for class_id, features in groups.items():
        if features:
            bank.observe_class_group(class_id, features, strict_nc=config.strict_nc)


def _check_stream(stream: TaskStream, config: RunConfig) -> None:
    report = validate_stream(stream, strict_nc=config.strict_nc)
    if report.errors:
        raise ProtocolError("invalid stream: " + "; ".join(report.errors))


def _audit_single_pass(bank: MemoryBank, counted_before: int, stream: TaskStream) -> None:
    # Online-constraint audit: every record must land in the bank exactly once,
    # so the growth of the accumulated counts equals the stream size.
    consumed = sum(p.count for p in bank) - counted_before
    if consumed != stream.n_examples:
        raise ProtocolError(
            f"online constraint violated: {stream.n_examples} records delivered "
            f"but {consumed} accumulated"
        )


def run_training(stream: TaskStream, config: RunConfig, bank: MemoryBank | None = None) -> MemoryBank:
    """Consume a validated stream task by task and return the filled bank.

    Each training embedding is read exactly once; the bank's per-class
    counts are the only state that changes anywhere in the pipeline.
    """
    _check_stream(stream, config)
    if bank is None:
        bank = MemoryBank()
    before = sum(p.count for p in bank)
    for task in stream.tasks:
        _train_task(bank, task, config)
    _audit_single_pass(bank, before, stream)
    return bank


def _task_classes_map(stream: TaskStream, config: RunConfig) -> dict[int, frozenset[int]]:
    """label -> the prototype ids eligible for it in task-aware mode."""
    mapping: dict[int, frozenset[int]] = {}
    for task in stream.tasks:
        if config.unsupervised:
            assert config.k is not None
            eligible = frozenset(
                pseudo_class_id(task.task_id, j, config.k) for j in range(config.k)
            )
        else:
            eligible = frozenset(task.class_ids)
        for cls in task.class_ids:
            mapping.setdefault(cls, eligible)
    return mapping


def run_evaluation(
    bank: MemoryBank,
    test_stream: TaskStream,
    config: RunConfig,
    upto: int | None = None,
    task_classes: Mapping[int, frozenset[int]] | None = None,
) -> EvaluationRow:
    """Score the bank on test splits 0..upto (default: all of them).

    In task-aware mode each example is restricted to the prototypes of its
    own task; task_classes defaults to the test stream's own structure.
    """
    if config.mode == "aware" and task_classes is None:
        task_classes = _task_classes_map(test_stream, config)
    allowed = task_classes if config.mode == "aware" else None
    last = len(test_stream.tasks) - 1 if upto is None else upto
    tasks = test_stream.tasks[: last + 1]

    per_task = []
    pooled: list = []
    for task in tasks:
        examples = task.examples
        if config.normalize:
            examples = tuple(
                dataclasses.replace(ex, embedding=unit_normalize(ex.embedding))
                for ex in examples
            )
        pooled.extend(examples)
        per_task.append(evaluate(bank, examples, config.metric, task_classes=allowed))
    overall = evaluate(bank, pooled, config.metric, task_classes=allowed)
    return EvaluationRow(per_task=per_task, overall=overall)


def run_benchmark(
    train: EmbeddingDataset,
    test: EmbeddingDataset,
    config: RunConfig,
) -> tuple[RunReport, MemoryBank]:
    """Full incremental run: train task-by-task, scoring all seen splits each step."""
    train_stream = make_nc_scenario(train.records, config.n_tasks)
    test_stream = make_nc_scenario(test.records, config.n_tasks)
    _check_stream(train_stream, config)
    task_classes = _task_classes_map(train_stream, config) if config.mode == "aware" else None

    bank = MemoryBank()
    before = sum(p.count for p in bank)
    matrix: list[list[float]] = []
    train_seconds = 0.0
    eval_seconds = 0.0
    row = None
    for i, task in enumerate(train_stream.tasks):
        t0 = time.perf_counter()
        _train_task(bank, task, config)
        train_seconds += time.perf_counter() - t0

        t0 = time.perf_counter()
        row = run_evaluation(bank, test_stream, config, upto=i, task_classes=task_classes)
        eval_seconds += time.perf_counter() - t0
        matrix.append(row.accuracies)
    _audit_single_pass(bank, before, train_stream)

    assert row is not None
    final_row = matrix[-1]
    report = RunReport(
        config=config.to_dict(),
        n_tasks=config.n_tasks,
        n_classes=len(bank),
        dim=bank.dim or 0,
        class_order=[c for t in train_stream.tasks for c in t.class_ids],
        accuracy_matrix=matrix,
        final_average_accuracy=sum(final_row) / len(final_row),
        final_accuracy=row.overall.accuracy,
        per_class=row.overall.per_class,
        missing_classes=list(row.overall.missing_classes),
        memory_bytes=bank.memory_bytes(),
        memory_kib=bank.memory_kib(),
        train_seconds=train_seconds,
        eval_seconds=eval_seconds,
    )
    return report, bank


def report_to_json(report: RunReport) -> dict:
    """JSON payload; everything outside "timing" is deterministic per config+seed."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": report.config,
        "result": {
            "n_tasks": report.n_tasks,
            "n_classes": report.n_classes,
            "dim": report.dim,
            "class_order": report.class_order,
            "accuracy_matrix": report.accuracy_matrix,
            "final_average_accuracy": report.final_average_accuracy,
            "final_accuracy": report.final_accuracy,
            "per_class": {str(label): list(ht) for label, ht in report.per_class.items()},
            "missing_classes": report.missing_classes,
            "memory_bytes": report.memory_bytes,
            "memory_kib": report.memory_kib,
        },
        "timing": {
            "train_seconds": report.train_seconds,
            "eval_seconds": report.eval_seconds,
        },
    }


def render_report(report: RunReport) -> str:
    return json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n"


def matrix_to_csv(report: RunReport) -> str:
    """Accuracy matrix as CSV, one row per training step (short rows are ragged)."""
    lines = ["task," + ",".join(f"split_{j}" for j in range(report.n_tasks))]
    for i, row in enumerate(report.accuracy_matrix):
        lines.append(f"{i}," + ",".join(repr(a) for a in row))
    return "\n".join(lines) + "\n"
