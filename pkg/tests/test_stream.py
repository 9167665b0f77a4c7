import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protobank import (
    Embedding,
    LabeledEmbedding,
    SplitError,
    Task,
    TaskStream,
    ValidationError,
    group_by_class,
    make_nc_scenario,
    validate_stream,
)

from conftest import make_records


def _labels(*counts):
    # counts[i] examples of class i
    out = []
    for cls, n in enumerate(counts):
        out.extend([cls] * n)
    return out


def test_even_split_sizes(rng):
    records = make_records(rng, _labels(*[3] * 10), dim=4)
    stream = make_nc_scenario(records, n_tasks=5)
    assert [len(t.class_ids) for t in stream.tasks] == [2, 2, 2, 2, 2]


def test_remainder_first_split(rng):
    records = make_records(rng, _labels(*[2] * 10), dim=4)
    stream = make_nc_scenario(records, n_tasks=3)
    assert [len(t.class_ids) for t in stream.tasks] == [4, 3, 3]
    # contiguous along ascending class ids
    assert [list(t.class_ids) for t in stream.tasks] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]


def test_infeasible_split(rng):
    records = make_records(rng, _labels(2, 2, 2), dim=4)
    with pytest.raises(SplitError):
        make_nc_scenario(records, n_tasks=5)
    with pytest.raises(SplitError):
        make_nc_scenario(records, n_tasks=0)


def test_class_order_must_be_permutation(rng):
    records = make_records(rng, _labels(1, 1, 1), dim=4)
    with pytest.raises(ValidationError):
        make_nc_scenario(records, n_tasks=2, class_order=[0, 1, 7])
    with pytest.raises(ValidationError):
        make_nc_scenario(records, n_tasks=2, class_order=[0, 1])


def test_custom_class_order_respected(rng):
    records = make_records(rng, _labels(1, 1, 1, 1), dim=4)
    stream = make_nc_scenario(records, n_tasks=2, class_order=[3, 1, 0, 2])
    assert [list(t.class_ids) for t in stream.tasks] == [[3, 1], [0, 2]]


def test_scenario_preserves_input_order_within_task(rng):
    # interleave classes 0/1 to check order survives the filtering
    labels = [0, 1, 0, 1, 0, 1]
    records = make_records(rng, labels, dim=4)
    stream = make_nc_scenario(records, n_tasks=1)
    assert [ex.example_id for ex in stream.tasks[0].examples] == [0, 1, 2, 3, 4, 5]


def test_scenario_deterministic(rng):
    records = make_records(rng, _labels(3, 3, 3, 3), dim=4)
    a = make_nc_scenario(records, n_tasks=2)
    b = make_nc_scenario(records, n_tasks=2)
    assert [t.class_ids for t in a.tasks] == [t.class_ids for t in b.tasks]
    assert [[e.example_id for e in t.examples] for t in a.tasks] == [
        [e.example_id for e in t.examples] for t in b.tasks
    ]


def test_task_invariants():
    e = Embedding([1.0])
    with pytest.raises(ValidationError):
        Task(task_id=0, class_ids=(), examples=())
    with pytest.raises(ValidationError):
        Task(task_id=0, class_ids=(1, 1), examples=())
    with pytest.raises(ValidationError):
        Task(task_id=0, class_ids=(1,), examples=(LabeledEmbedding(0, 2, e),))
    with pytest.raises(ValidationError):
        LabeledEmbedding(0, -3, e)


def test_group_by_class_direct(rng):
    a, b = 5, 9
    records = make_records(rng, [a, b, a], dim=4)
    task = Task(task_id=0, class_ids=(a, b), examples=tuple(records))
    groups = group_by_class(task)
    assert list(groups) == [a, b]
    assert len(groups[a]) == 2 and len(groups[b]) == 1
    assert groups[a] == [records[0].embedding, records[2].embedding]


def test_group_by_class_single_class(rng):
    records = make_records(rng, [4] * 7, dim=3)
    task = Task(task_id=0, class_ids=(4,), examples=tuple(records))
    groups = group_by_class(task)
    assert list(groups) == [4]
    assert len(groups[4]) == 7


def test_group_by_class_multiset_oracle(rng):
    # union of groups must equal the input multiset, independently counted
    labels = [int(x) for x in rng.integers(0, 7, size=1000)]
    records = make_records(rng, labels, dim=2)
    task = Task(task_id=0, class_ids=tuple(sorted(set(labels))), examples=tuple(records))
    groups = group_by_class(task)

    expected = {}
    for lbl in labels:
        expected[lbl] = expected.get(lbl, 0) + 1
    assert {cls: len(g) for cls, g in groups.items()} == expected
    assert sum(len(g) for g in groups.values()) == len(records)
    regrouped = sorted(
        (cls, e.values.tobytes()) for cls, g in groups.items() for e in g
    )
    original = sorted((r.label, r.embedding.values.tobytes()) for r in records)
    assert regrouped == original


def test_validate_stream_clean(rng):
    records = make_records(rng, _labels(2, 2, 2, 2), dim=4)
    report = validate_stream(make_nc_scenario(records, n_tasks=2))
    assert report.ok
    assert report.errors == [] and report.warnings == []


def test_validate_stream_class_reappearance(rng):
    t0 = Task(0, (3,), tuple(make_records(rng, [3, 3], dim=2, start_id=0)))
    t1 = Task(1, (3,), tuple(make_records(rng, [3], dim=2, start_id=10)))
    stream = TaskStream((t0, t1))
    strict = validate_stream(stream, strict_nc=True)
    assert any("class 3" in m for m in strict.errors)
    lenient = validate_stream(stream, strict_nc=False)
    assert not lenient.errors
    assert any("class 3" in m for m in lenient.warnings)


def test_validate_stream_duplicate_example_id(rng):
    t0 = Task(0, (0,), tuple(make_records(rng, [0], dim=2, start_id=5)))
    t1 = Task(1, (1,), tuple(make_records(rng, [1], dim=2, start_id=5)))
    report = validate_stream(TaskStream((t0, t1)))
    assert any("example id 5" in m for m in report.errors)


def test_validate_stream_dim_mismatch(rng):
    t0 = Task(0, (0,), tuple(make_records(rng, [0], dim=2)))
    t1 = Task(1, (1,), tuple(make_records(rng, [1], dim=3, start_id=10)))
    report = validate_stream(TaskStream((t0, t1)))
    assert any("dim" in m for m in report.errors)


@given(
    n_classes=st.integers(min_value=1, max_value=12),
    n_tasks=st.integers(min_value=1, max_value=12),
    per_class=st.integers(min_value=1, max_value=3),
)
@settings(max_examples=80, deadline=None)
def test_any_feasible_scenario_validates_clean(n_classes, n_tasks, per_class):
    rng = np.random.default_rng(99)
    labels = [c for c in range(n_classes) for _ in range(per_class)]
    records = make_records(rng, labels, dim=3)
    if n_tasks > n_classes:
        with pytest.raises(SplitError):
            make_nc_scenario(records, n_tasks)
        return
    stream = make_nc_scenario(records, n_tasks)
    assert validate_stream(stream, strict_nc=True).ok
    sizes = [len(t.class_ids) for t in stream.tasks]
    assert sum(sizes) == n_classes
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)  # remainder-first
