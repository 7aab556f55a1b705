"""Output strategies and the filtered prediction pipeline.

When the membership filter flags an input as belonging to an unlearned
class, the engine refuses to answer with the surrogate model and instead
fabricates a label by one of four strategies:

    uniform        one of all classes ever learned, equiprobable
    proportional   weighted by class record counts
    inverse        weighted by centroid similarity (reciprocal by default)
    nearest        the most similar retained centroid, deterministic

Unflagged inputs go to the surrogate model, which stands in for the
trained network. The network never forgets anything by itself, so the
default surrogate classifies over every class ever learned; that is what
lets a leaked unlearned input still be answered correctly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .engine import membership_filter
from .errors import ArgumentError, MissingClass
from .store import VectorStore, as_vector

EPSILON = 1e-6


class Strategy(enum.Enum):
    UNIFORM = "uniform"
    PROPORTIONAL = "proportional"
    INVERSE = "inverse"
    NEAREST = "nearest"


def strategy_uniform(n_classes: int, rng) -> int:
    """Index drawn uniformly from range(n_classes)."""
    if n_classes < 1:
        raise ArgumentError(f"n_classes must be positive, got {n_classes}")
    return int(rng.integers(n_classes))


def strategy_proportional(counts: dict[int, int], rng) -> int:
    """Label drawn with probability proportional to its count."""
    if not counts:
        raise ArgumentError("empty count map")
    labels = sorted(counts)
    weights = np.array([counts[lb] for lb in labels], dtype=np.float64)
    if np.any(weights <= 0):
        raise ArgumentError("counts must be positive")
    return int(labels[rng.choice(len(labels), p=weights / weights.sum())])


def inverse_probabilities(v_in, centroids: dict[int, np.ndarray],
                          weighting: str = "reciprocal"):
    """Distribution over labels from centroid cosine similarities.

    "reciprocal": weight 1/max(cos, EPSILON), so far classes dominate; a
    non-positive cosine clamps to 1/EPSILON and swamps the draw.
    "cosine": weight max(cos, EPSILON), so near classes dominate.
    """
    if weighting not in ("reciprocal", "cosine"):
        raise ArgumentError(f"unknown inverse weighting {weighting!r}")
    if not centroids:
        raise ArgumentError("empty centroid map")
    v = as_vector(v_in)
    labels = sorted(centroids)
    weights = []
    for lb in labels:
        c = as_vector(centroids[lb])
        sim = float(np.dot(c, v) / (np.linalg.norm(c) * np.linalg.norm(v)))
        sim = max(-1.0, min(1.0, sim))
        clamped = max(sim, EPSILON)
        weights.append(1.0 / clamped if weighting == "reciprocal" else clamped)
    weights = np.array(weights)
    return labels, weights / weights.sum()


def strategy_inverse(v_in, centroids: dict[int, np.ndarray], rng,
                     weighting: str = "reciprocal") -> int:
    labels, probs = inverse_probabilities(v_in, centroids, weighting)
    return int(labels[rng.choice(len(labels), p=probs)])


def strategy_nearest(v_in, centroids: dict[int, np.ndarray]) -> int:
    """Label of the most cosine-similar centroid; ties take the lower
    label. Deterministic, no randomness involved."""
    if not centroids:
        raise ArgumentError("empty centroid map")
    v = as_vector(v_in)
    best_label = None
    best_sim = None
    for lb in sorted(centroids):
        c = as_vector(centroids[lb])
        sim = float(np.dot(c, v) / (np.linalg.norm(c) * np.linalg.norm(v)))
        if best_sim is None or sim > best_sim:
            best_label, best_sim = lb, sim
    return best_label


class NearestCentroidSurrogate:
    """Stand-in for the trained network: nearest centroid over every
    class in the given stores. Reads centroids live, so it tracks inserts
    and migrations."""

    def __init__(self, *stores: VectorStore):
        if not stores:
            raise ArgumentError("surrogate needs at least one store")
        self.stores = stores

    def classify(self, vector, record_id: int | None = None) -> int:
        centroids: dict[int, np.ndarray] = {}
        for st in self.stores:
            centroids.update(st.centroids())
        if not centroids:
            raise MissingClass("no classes available to classify against")
        return strategy_nearest(vector, centroids)


class TableSurrogate:
    """Externally computed predictions keyed by record id."""

    def __init__(self, predictions: dict[int, int]):
        if not predictions:
            raise ArgumentError("empty prediction table")
        self.predictions = dict(predictions)

    def classify(self, vector, record_id: int | None = None) -> int:
        if record_id is None:
            raise ArgumentError("table surrogate needs a record id")
        if record_id not in self.predictions:
            raise ArgumentError(f"no prediction for record id {record_id}")
        return self.predictions[record_id]


@dataclass(frozen=True)
class Prediction:
    """predict() outcome. ``strategy_used`` is set iff the input was
    flagged by the membership filter."""

    label: int
    flagged: bool
    strategy_used: Strategy | None

    def __post_init__(self):
        if self.flagged != (self.strategy_used is not None):
            raise ArgumentError("strategy_used must be present iff flagged")


def _merged_counts(retained: VectorStore, unlearned: VectorStore) -> dict[int, int]:
    counts = {lb: retained.count_of(lb) for lb in retained.labels()}
    for lb in unlearned.labels():
        counts[lb] = counts.get(lb, 0) + unlearned.count_of(lb)
    return counts


def _merged_centroids(retained: VectorStore, unlearned: VectorStore):
    centroids = retained.centroids()
    centroids.update(unlearned.centroids())
    return centroids


def predict(v_in, retained: VectorStore, unlearned: VectorStore, *,
            threshold: float, strategy: Strategy, model, rng,
            record_id: int | None = None,
            filter_mode: str = "record-max",
            inverse_weighting: str = "reciprocal") -> Prediction:
    """Filtered prediction for one input.

    Unflagged inputs are answered by the surrogate model. Flagged inputs
    get a strategy label: uniform/proportional/inverse draw over every
    class ever learned (both stores), nearest shifts to a retained
    centroid only and therefore never answers with an unlearned class.
    """
    if not isinstance(strategy, Strategy):
        strategy = Strategy(strategy)
    v = as_vector(v_in)
    if membership_filter(unlearned, v, threshold, filter_mode):
        if strategy is Strategy.UNIFORM:
            universe = sorted(set(retained.labels()) | set(unlearned.labels()))
            label = universe[strategy_uniform(len(universe), rng)]
        elif strategy is Strategy.PROPORTIONAL:
            label = strategy_proportional(_merged_counts(retained, unlearned), rng)
        elif strategy is Strategy.INVERSE:
            label = strategy_inverse(
                v, _merged_centroids(retained, unlearned), rng, inverse_weighting
            )
        else:
            centroids = retained.centroids()
            if not centroids:
                raise ArgumentError("no retained classes to shift to")
            label = strategy_nearest(v, centroids)
        return Prediction(label=label, flagged=True, strategy_used=strategy)
    return Prediction(
        label=model.classify(v, record_id=record_id),
        flagged=False,
        strategy_used=None,
    )
