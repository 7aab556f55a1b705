"""In-memory vector stores with exact cosine KNN and class migration.

Two stores back the engine: one holds vectors of classes the model still
serves ("retained"), the other holds vectors of classes that have been
unlearned ("unlearned"). Both are instances of :class:`VectorStore`;
unlearning a class is an atomic migration of every record of that class
from one store to the other.

Reads work on immutable snapshots: a query grabs the current snapshot
under the store lock and then computes outside it, so a concurrent
migration never exposes a half-moved class. Writers hold the lock (both
locks, in a fixed order, for two-store operations).
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (ArgumentError, DegenerateVector, DimensionMismatch,
                     DuplicateId, EmptyStore, MissingClass)

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1
_LABEL_MAX = 2**32 - 1


def as_vector(values) -> np.ndarray:
    """Coerce ``values`` to a finite, non-zero 1-D float64 array.

    Raises:
        DimensionMismatch: not one-dimensional or empty.
        DegenerateVector: NaN/inf payload, or all components zero.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateVector("vector contains NaN or infinity")
    if not np.any(v):
        raise DegenerateVector("zero vector has no direction")
    return v


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1.0, 1.0]."""
    va, vb = as_vector(a), as_vector(b)
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatch(
            f"vector dimensions differ: {va.shape[0]} vs {vb.shape[0]}"
        )
    denom = float(np.linalg.norm(va)) * float(np.linalg.norm(vb))
    if not np.isfinite(denom) or denom == 0.0:
        # overflow/underflow in the norms: rescale each vector by its own
        # largest component first (cosine is scale-invariant)
        va = va / np.abs(va).max()
        vb = vb / np.abs(vb).max()
        denom = float(np.linalg.norm(va)) * float(np.linalg.norm(vb))
    sim = float(np.dot(va, vb)) / denom
    return max(-1.0, min(1.0, sim))


@dataclass(frozen=True)
class VectorRecord:
    """One embedded sample: a unique id, its class label, and the vector."""

    id: int
    label: int
    vector: np.ndarray

    def __post_init__(self):
        if not isinstance(self.id, int) or isinstance(self.id, bool):
            raise ArgumentError(f"record id must be an integer, got {self.id!r}")
        if not _INT64_MIN <= self.id <= _INT64_MAX:
            raise ArgumentError(f"record id {self.id} outside 64-bit range")
        if not isinstance(self.label, int) or isinstance(self.label, bool):
            raise ArgumentError(f"label must be an integer, got {self.label!r}")
        if not 0 <= self.label <= _LABEL_MAX:
            raise ArgumentError(f"label {self.label} outside [0, 2^32)")
        object.__setattr__(self, "vector", as_vector(self.vector))
        self.vector.setflags(write=False)


@dataclass(frozen=True)
class ClassSummary:
    """Per-class bookkeeping: member count and running centroid."""

    label: int
    count: int
    centroid: np.ndarray


class _Snapshot:
    """Immutable view of a store used by queries."""

    __slots__ = ("records", "ids", "labels", "matrix", "norms")

    def __init__(self, records, ids, labels, matrix, norms):
        self.records = records
        self.ids = ids
        self.labels = labels
        self.matrix = matrix
        self.norms = norms


_birth = itertools.count()


class VectorStore:
    """Exact-search vector store keyed by record id.

    Similarity search is a brute-force cosine scan over a cached matrix,
    so results are exact and permutation-stable: ranking depends only on
    record contents, with exact-tie breaks on ascending id.
    """

    def __init__(self, name: str, dim: int | None = None):
        if dim is not None and dim < 1:
            raise ArgumentError(f"dim must be positive, got {dim}")
        self.name = name
        self._dim = dim
        self._records: dict[int, VectorRecord] = {}
        self._counts: dict[int, int] = {}
        self._sums: dict[int, np.ndarray] = {}
        self._snap: _Snapshot | None = None
        self._lock = threading.RLock()
        self._order = next(_birth)
        self.companion: VectorStore | None = None

    # -- basic introspection ------------------------------------------------

    @property
    def dim(self) -> int | None:
        return self._dim

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, rid: int) -> bool:
        return rid in self._records

    def get(self, rid: int) -> VectorRecord | None:
        return self._records.get(rid)

    def labels(self) -> list[int]:
        return sorted(self._counts)

    def count_of(self, label: int) -> int:
        return self._counts.get(label, 0)

    def records(self) -> list[VectorRecord]:
        return list(self._records.values())

    @property
    def summaries(self) -> dict[int, ClassSummary]:
        with self._lock:
            out = {}
            for label in sorted(self._counts):
                n = self._counts[label]
                c = self._sums[label] / n
                c.setflags(write=False)
                out[label] = ClassSummary(label=label, count=n, centroid=c)
            return out

    def centroids(self) -> dict[int, np.ndarray]:
        return {lb: s.centroid for lb, s in self.summaries.items()}

    # -- mutation -----------------------------------------------------------

    def insert(self, record: VectorRecord) -> None:
        """Add one record. Ids must be unique across this store and its
        companion; the first insert fixes the store dimension."""
        if not isinstance(record, VectorRecord):
            record = VectorRecord(*record)
        other = self.companion
        first, second = _ordered_locks(self, other)
        with first:
            with second:
                if self._dim is None:
                    self._dim = record.vector.shape[0]
                elif record.vector.shape[0] != self._dim:
                    raise DimensionMismatch(
                        f"store {self.name!r} holds {self._dim}-dim vectors, "
                        f"got {record.vector.shape[0]}"
                    )
                if record.id in self._records:
                    raise DuplicateId(f"id {record.id} already present in {self.name!r}")
                if other is not None and record.id in other._records:
                    raise DuplicateId(
                        f"id {record.id} already present in companion store {other.name!r}"
                    )
                self._records[record.id] = record
                self._counts[record.label] = self._counts.get(record.label, 0) + 1
                if record.label in self._sums:
                    self._sums[record.label] = self._sums[record.label] + record.vector
                else:
                    self._sums[record.label] = record.vector.copy()
                self._snap = None

    def insert_many(self, records) -> int:
        n = 0
        for r in records:
            self.insert(r)
            n += 1
        return n

    # -- queries ------------------------------------------------------------

    def _view(self) -> _Snapshot:
        with self._lock:
            if self._snap is None:
                recs = tuple(self._records.values())
                if recs:
                    ids = np.array([r.id for r in recs], dtype=np.int64)
                    labels = np.array([r.label for r in recs], dtype=np.int64)
                    matrix = np.stack([r.vector for r in recs])
                    # einsum evaluates every row with one fixed reduction
                    # order, so identical vectors get bit-identical norms
                    # (BLAS kernels don't guarantee that), keeping the
                    # documented id tie-break exact
                    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
                else:
                    ids = np.empty(0, dtype=np.int64)
                    labels = np.empty(0, dtype=np.int64)
                    matrix = np.empty((0, self._dim or 1))
                    norms = np.empty(0)
                self._snap = _Snapshot(recs, ids, labels, matrix, norms)
            return self._snap

    def _similarities(self, query) -> tuple[_Snapshot, np.ndarray]:
        q = as_vector(query)
        snap = self._view()
        if not snap.records:
            raise EmptyStore(f"store {self.name!r} is empty")
        if q.shape[0] != snap.matrix.shape[1]:
            raise DimensionMismatch(
                f"query dim {q.shape[0]} != store dim {snap.matrix.shape[1]}"
            )
        sims = np.einsum("ij,j->i", snap.matrix, q) / (snap.norms * np.linalg.norm(q))
        return snap, np.clip(sims, -1.0, 1.0)

    def knn(self, query, k: int) -> list[tuple[VectorRecord, float]]:
        """The k most cosine-similar records, similarity descending.

        Exact ties rank by ascending record id. If fewer than k records
        exist, all of them are returned.
        """
        if k < 1:
            raise ArgumentError(f"k must be positive, got {k}")
        snap, sims = self._similarities(query)
        order = np.lexsort((snap.ids, -sims))[:k]
        return [(snap.records[i], float(sims[i])) for i in order]

    def knn_classify(self, query, k: int) -> int:
        """Majority label among the k nearest records.

        Vote ties break by higher summed similarity, then lower label.
        """
        neighbours = self.knn(query, k)
        votes: dict[int, int] = {}
        strength: dict[int, float] = {}
        for rec, sim in neighbours:
            votes[rec.label] = votes.get(rec.label, 0) + 1
            strength[rec.label] = strength.get(rec.label, 0.0) + sim
        return min(votes, key=lambda lb: (-votes[lb], -strength[lb], lb))

    def centroid_of(self, label: int) -> np.ndarray:
        with self._lock:
            if label not in self._counts:
                raise MissingClass(f"class {label} not resident in {self.name!r}")
            c = self._sums[label] / self._counts[label]
            c.setflags(write=False)
            return c

    def recheck_summaries(self, tol: float = 1e-9) -> bool:
        """Recompute counts/centroids from raw records and compare with the
        running summaries. Used as a consistency probe in tests."""
        with self._lock:
            counts: dict[int, int] = {}
            sums: dict[int, np.ndarray] = {}
            for r in self._records.values():
                counts[r.label] = counts.get(r.label, 0) + 1
                sums[r.label] = sums.get(r.label, 0) + r.vector
            if counts != self._counts:
                return False
            for lb, n in counts.items():
                want = sums[lb] / n
                got = self._sums[lb] / self._counts[lb]
                scale = max(1.0, float(np.abs(want).max()))
                if np.abs(want - got).max() > tol * scale:
                    return False
            return True


def _ordered_locks(a: VectorStore, b: VectorStore | None):
    """Two store locks in creation order (deadlock-free), or one lock and
    a no-op context when there is no second store."""
    if b is None or b is a:
        return a._lock, _NULL_CTX
    if a._order < b._order:
        return a._lock, b._lock
    return b._lock, a._lock


class _NullContext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


_NULL_CTX = _NullContext()


def pair_stores(retained: VectorStore, unlearned: VectorStore) -> None:
    """Link two stores so id uniqueness is enforced across the pair."""
    retained.companion = unlearned
    unlearned.companion = retained


def migrate_class(src: VectorStore, dst: VectorStore, label: int) -> int:
    """Move every record of ``label`` from ``src`` to ``dst`` atomically.

    Returns the number of records moved. On any failure both stores are
    left untouched. Readers never observe a partially moved class: the
    whole move happens under both store locks and queries run on
    snapshots taken before or after it.
    """
    if src is dst:
        raise ArgumentError("source and destination are the same store")
    first, second = _ordered_locks(src, dst)
    with first:
        with second:
            if label not in src._counts:
                raise MissingClass(f"class {label} not resident in {src.name!r}")
            if dst._dim is not None and src._dim != dst._dim:
                raise DimensionMismatch(
                    f"store dims differ: {src._dim} vs {dst._dim}"
                )
            moving = [r for r in src._records.values() if r.label == label]
            for r in moving:
                if r.id in dst._records:
                    raise DuplicateId(
                        f"id {r.id} already present in {dst.name!r}"
                    )
            if dst._dim is None:
                dst._dim = src._dim
            for r in moving:
                del src._records[r.id]
                dst._records[r.id] = r
            n = src._counts.pop(label)
            s = src._sums.pop(label)
            dst._counts[label] = dst._counts.get(label, 0) + n
            if label in dst._sums:
                dst._sums[label] = dst._sums[label] + s
            else:
                dst._sums[label] = s.copy()
            src._snap = None
            dst._snap = None
            return n


def joint_counts(a: VectorStore, b: VectorStore) -> tuple[int, int]:
    """Record counts of both stores at one consistent observation point."""
    first, second = _ordered_locks(a, b)
    with first:
        with second:
            return len(a._records), len(b._records)


def joint_locate(a: VectorStore, b: VectorStore, rid: int) -> list[str]:
    """Names of the stores holding ``rid`` at one observation point."""
    first, second = _ordered_locks(a, b)
    with first:
        with second:
            out = []
            if rid in a._records:
                out.append(a.name)
            if rid in b._records:
                out.append(b.name)
            return out
