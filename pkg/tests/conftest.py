import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from unlearndb import VectorRecord, VectorStore, pair_stores

settings.register_profile(
    "ci",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def make_records(rng, n, dim, n_classes, start_id=0):
    """Random non-degenerate records with ids start_id..start_id+n-1."""
    vecs = rng.standard_normal((n, dim))
    # guard against the (never observed) zero draw
    vecs[np.all(vecs == 0, axis=1)] = 1.0
    labels = rng.integers(n_classes, size=n)
    return [
        VectorRecord(id=start_id + i, label=int(labels[i]), vector=vecs[i])
        for i in range(n)
    ]


def make_store(rng, n, dim, n_classes, name="retained"):
    store = VectorStore(name, dim=dim)
    store.insert_many(make_records(rng, n, dim, n_classes))
    return store


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def store_pair():
    retained = VectorStore("retained", dim=4)
    unlearned = VectorStore("unlearned", dim=4)
    pair_stores(retained, unlearned)
    return retained, unlearned
