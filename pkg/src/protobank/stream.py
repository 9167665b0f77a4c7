"""Class-incremental task streams: construction, grouping, validation.

A stream is an ordered list of tasks, each carrying a disjoint set of class
ids and the labeled embeddings for those classes. Every example is delivered
exactly once across the whole stream (online constraint).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import SplitError, ValidationError
from .vectors import Embedding

__all__ = [
    "LabeledEmbedding",
    "Task",
    "TaskStream",
    "StreamReport",
    "make_nc_scenario",
    "group_by_class",
    "validate_stream",
]


@dataclass(frozen=True, slots=True)
class LabeledEmbedding:
    """One training/test record: embedding plus its class label and unique id."""

    example_id: int
    label: int
    embedding: Embedding

    def __post_init__(self) -> None:
        if self.label < 0:
            raise ValidationError(f"label must be >= 0, got {self.label}")


@dataclass(frozen=True)
class Task:
    """One incremental step: an ordered class set and its examples."""

    task_id: int
    class_ids: tuple[int, ...]
    examples: tuple[LabeledEmbedding, ...]

    def __post_init__(self) -> None:
        if self.task_id < 0:
            raise ValidationError(f"task_id must be >= 0, got {self.task_id}")
        if not self.class_ids:
            raise ValidationError("task must declare at least one class")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise ValidationError("task class_ids contain duplicates")
        allowed = set(self.class_ids)
        for ex in self.examples:
            if ex.label not in allowed:
                raise ValidationError(
                    f"example {ex.example_id} has label {ex.label} outside task classes"
                )


@dataclass(frozen=True)
class TaskStream:
    """Ordered sequence of tasks. Protocol conformance is checked by validate_stream."""

    tasks: tuple[Task, ...]

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ValidationError("stream must contain at least one task")

    @property
    def n_examples(self) -> int:
        return sum(len(t.examples) for t in self.tasks)

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(c for t in self.tasks for c in t.class_ids)


@dataclass
class StreamReport:
    """Outcome of validate_stream: protocol violations split by severity."""

    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors and not self.warnings


def make_nc_scenario(
    examples: Sequence[LabeledEmbedding],
    n_tasks: int,
    class_order: Sequence[int] | None = None,
) -> TaskStream:
    """Partition examples into n_tasks tasks with disjoint, contiguous class groups.

    Classes are laid out along class_order (default: ascending class id) and
    split remainder-first: when n_classes % n_tasks == r, the first r tasks
    get one extra class. Within each task the input example order is kept.
    """
    if n_tasks < 1:
        raise SplitError(f"n_tasks must be >= 1, got {n_tasks}")
    present = sorted({ex.label for ex in examples})
    if class_order is None:
        order = present
    else:
        order = list(class_order)
        if sorted(order) != present:
            raise ValidationError(
                "class_order must be a permutation of the labels present in the examples"
            )
    n_classes = len(order)
    if n_tasks > n_classes:
        raise SplitError(f"cannot split {n_classes} classes into {n_tasks} tasks")

    base, extra = divmod(n_classes, n_tasks)
    sizes = [base + 1] * extra + [base] * (n_tasks - extra)

    tasks = []
    start = 0
    for task_id, size in enumerate(sizes):
        group = tuple(order[start : start + size])
        start += size
        members = frozenset(group)
        tasks.append(
            Task(
                task_id=task_id,
                class_ids=group,
                examples=tuple(ex for ex in examples if ex.label in members),
            )
        )
    return TaskStream(tasks=tuple(tasks))


def group_by_class(task: Task) -> dict[int, list[Embedding]]:
    """Reorder a task's examples into per-class feature groups.

    Keys are exactly task.class_ids (in declared order); within each group
    the input order is preserved.
    """
    groups: dict[int, list[Embedding]] = {cls: [] for cls in task.class_ids}
    for ex in task.examples:
        groups[ex.label].append(ex.embedding)
    return groups


def validate_stream(stream: TaskStream, strict_nc: bool = True) -> StreamReport:
    """Check a stream against the class-incremental protocol.

    Reports class reappearance across tasks (error when strict_nc, warning
    otherwise), duplicate example ids (always an error: each pattern must be
    delivered exactly once), and embedding-dimension inconsistencies.
    """
    report = StreamReport()

    first_task_of_class: dict[int, int] = {}
    for task in stream.tasks:
        for cls in task.class_ids:
            if cls in first_task_of_class:
                msg = (
                    f"class {cls} appears in task {first_task_of_class[cls]} "
                    f"and again in task {task.task_id}"
                )
                (report.errors if strict_nc else report.warnings).append(msg)
            else:
                first_task_of_class[cls] = task.task_id

    seen_ids: dict[int, int] = {}
    for task in stream.tasks:
        for ex in task.examples:
            if ex.example_id in seen_ids:
                report.errors.append(
                    f"example id {ex.example_id} delivered more than once "
                    f"(tasks {seen_ids[ex.example_id]} and {task.task_id})"
                )
            else:
                seen_ids[ex.example_id] = task.task_id

    dim: int | None = None
    for task in stream.tasks:
        for ex in task.examples:
            if dim is None:
                dim = ex.embedding.dim
            elif ex.embedding.dim != dim:
                report.errors.append(
                    f"example id {ex.example_id} has dim {ex.embedding.dim}, expected {dim}"
                )
    return report
