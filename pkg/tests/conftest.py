import numpy as np
import pytest

from protobank import Embedding, LabeledEmbedding, MemoryBank


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_embeddings(rng, n, dim):
    return [Embedding(rng.normal(size=dim)) for _ in range(n)]


def make_records(rng, labels, dim, start_id=0):
    return [
        LabeledEmbedding(example_id=start_id + i, label=int(lbl), embedding=Embedding(rng.normal(size=dim)))
        for i, lbl in enumerate(labels)
    ]


def random_bank(rng, n_classes, dim):
    bank = MemoryBank()
    for cls in rng.permutation(n_classes):
        bank.observe_class_group(int(cls), make_embeddings(rng, int(rng.integers(1, 4)), dim))
    return bank
