import numpy as np
import pytest

from protobank import (
    DimensionError,
    Embedding,
    EmptyBankError,
    EmptyGroupError,
    FormatError,
    MemoryBank,
    ProtocolError,
    ValidationError,
    per_class_bytes,
)

from conftest import make_embeddings


def test_two_point_mean():
    bank = MemoryBank()
    bank.observe_class_group(7, [Embedding([1, 2]), Embedding([3, 4])])
    proto = bank.prototype(7)
    assert proto.count == 2
    assert np.allclose(proto.mean, [2.0, 3.0])


def test_singleton_mean():
    bank = MemoryBank()
    bank.observe_class_group(7, [Embedding([5, 5])])
    assert np.array_equal(bank.prototype(7).mean, np.array([5, 5], dtype=np.float32))


def test_empty_group_rejected():
    with pytest.raises(EmptyGroupError):
        MemoryBank().observe_class_group(0, [])


def test_negative_class_id_rejected():
    with pytest.raises(ValidationError):
        MemoryBank().observe_class_group(-1, [Embedding([1.0])])


def test_dim_mismatch_rejected():
    bank = MemoryBank()
    bank.observe_class_group(0, [Embedding([1, 2])])
    with pytest.raises(DimensionError):
        bank.observe_class_group(1, [Embedding([1, 2, 3])])
    with pytest.raises(DimensionError):
        bank.observe_class_group(2, [Embedding([1, 2]), Embedding([1, 2, 3])])


def test_strict_nc_reappearance_is_error():
    bank = MemoryBank()
    bank.observe_class_group(3, [Embedding([1, 1])])
    with pytest.raises(ProtocolError):
        bank.observe_class_group(3, [Embedding([2, 2])])


def test_lenient_mode_merges_running_mean():
    bank = MemoryBank()
    bank.observe_class_group(3, [Embedding([1, 1])], strict_nc=False)
    bank.observe_class_group(3, [Embedding([3, 3]), Embedding([5, 5])], strict_nc=False)
    proto = bank.prototype(3)
    assert proto.count == 3
    assert np.allclose(proto.mean, [3.0, 3.0])


def test_streaming_equals_batch_mean_oracle(rng):
    # oracle: one-shot float64 mean over the float32 features the bank consumes
    mat = rng.normal(size=(1000, 64)).astype(np.float32)
    oracle = mat.astype(np.float64).mean(axis=0).astype(np.float32)

    features = [Embedding(row) for row in mat]
    for trial in range(10):
        cut_rng = np.random.default_rng(trial)
        n_cuts = int(cut_rng.integers(1, 12))
        cuts = sorted(set(int(c) for c in cut_rng.integers(1, 1000, size=n_cuts)))
        chunks = np.split(np.arange(1000), cuts)
        bank = MemoryBank()
        for chunk in chunks:
            bank.observe_class_group(0, [features[i] for i in chunk], strict_nc=False)
        got = bank.prototype(0).mean
        assert np.abs(got.astype(np.float64) / oracle.astype(np.float64) - 1.0).max() < 1e-6


def test_chunking_is_bit_identical(rng):
    # same element order, different chunk boundaries: identical float64 sums
    mat = rng.normal(size=(500, 16))
    features = [Embedding(row) for row in mat]

    def run(boundaries):
        bank = MemoryBank()
        start = 0
        for b in list(boundaries) + [len(features)]:
            if start < b:
                bank.observe_class_group(0, features[start:b], strict_nc=False)
            start = b
        return bank.prototype(0).mean

    base = run([])
    for boundaries in ([100], [1, 2, 3], [250, 251], [499], list(range(50, 500, 50))):
        assert np.array_equal(run(boundaries), base)


def test_memory_bytes_table():
    # feature dim -> exact per-class cost in KiB
    for dim, kib in [(192, 0.75), (512, 2.0), (768, 3.0), (2048, 8.0)]:
        assert per_class_bytes(dim) == dim * 4
        assert per_class_bytes(dim) / 1024 == kib


def test_memory_bytes_counts_classes(rng):
    bank = MemoryBank()
    assert bank.memory_bytes() == 0
    for cls in range(10):
        bank.observe_class_group(cls, make_embeddings(rng, 3, 768))
    assert bank.memory_bytes() == 10 * 768 * 4
    assert bank.memory_kib() == 30.0


def test_snapshot_roundtrip_bit_exact(rng):
    bank = MemoryBank()
    for cls in (4, 0, 9):
        bank.observe_class_group(cls, make_embeddings(rng, 5, 32))
    restored = MemoryBank.restore(bank.snapshot())
    assert restored.dim == bank.dim
    assert sorted(restored.class_ids) == sorted(bank.class_ids)
    for cls in bank.class_ids:
        assert restored.prototype(cls).count == bank.prototype(cls).count
        assert np.array_equal(restored.prototype(cls).mean, bank.prototype(cls).mean)


def test_snapshot_deterministic(rng):
    bank = MemoryBank()
    for cls in (2, 1, 5):
        bank.observe_class_group(cls, make_embeddings(rng, 2, 8))
    assert bank.snapshot() == bank.snapshot()


def test_snapshot_canonical_across_insertion_order(rng):
    feats = {cls: make_embeddings(rng, 3, 8) for cls in range(4)}
    a, b = MemoryBank(), MemoryBank()
    for cls in range(4):
        a.observe_class_group(cls, feats[cls])
    for cls in reversed(range(4)):
        b.observe_class_group(cls, feats[cls])
    assert a.snapshot() == b.snapshot()


def test_snapshot_empty_bank_rejected():
    with pytest.raises(EmptyBankError):
        MemoryBank().snapshot()


def test_restore_rejects_corruption(rng):
    bank = MemoryBank()
    bank.observe_class_group(0, make_embeddings(rng, 2, 8))
    payload = bank.snapshot()

    with pytest.raises(FormatError):
        MemoryBank.restore(payload[: len(payload) - 3])  # truncated
    with pytest.raises(FormatError):
        MemoryBank.restore(payload + b"\x00")  # trailing garbage
    with pytest.raises(FormatError):
        MemoryBank.restore(b"XXXX" + payload[4:])  # bad magic
    with pytest.raises(FormatError):
        MemoryBank.restore(payload[:4] + b"\x63\x00" + payload[6:])  # version 99
    with pytest.raises(FormatError):
        MemoryBank.restore(b"OT")  # shorter than the header


def test_restore_then_continue_accumulating(rng):
    bank = MemoryBank()
    feats = make_embeddings(rng, 4, 8)
    bank.observe_class_group(1, feats[:2], strict_nc=False)
    restored = MemoryBank.restore(bank.snapshot())
    restored.observe_class_group(1, feats[2:], strict_nc=False)

    oracle = MemoryBank()
    oracle.observe_class_group(1, feats)
    assert restored.prototype(1).count == 4
    assert np.allclose(
        restored.prototype(1).mean, oracle.prototype(1).mean, rtol=1e-6, atol=0
    )
