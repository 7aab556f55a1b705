"""Class identification, unlearning, and the membership filter.

An unlearning request carries only example vectors of the class to
forget. The engine identifies the class by majority KNN vote over the
retained store, then migrates every record of that class into the
unlearned store. From then on the unlearned store doubles as the
membership filter: an input whose best cosine similarity against it
reaches the threshold is treated as belonging to a forgotten class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionMismatch, EmptyStore
from .store import VectorStore, as_vector, migrate_class


@dataclass(frozen=True)
class UnlearnRequest:
    """Example vectors of one class that should be forgotten."""

    exemplars: tuple
    k: int = 100

    def __post_init__(self):
        vecs = tuple(as_vector(v) for v in self.exemplars)
        if not vecs:
            raise ArgumentError("request needs at least one exemplar")
        dim = vecs[0].shape[0]
        for v in vecs[1:]:
            if v.shape[0] != dim:
                raise DimensionMismatch("exemplars have mixed dimensions")
        if self.k < 1:
            raise ArgumentError(f"k must be positive, got {self.k}")
        object.__setattr__(self, "exemplars", vecs)


@dataclass(frozen=True)
class MigrationReport:
    """Outcome of one unlearning call."""

    identified_label: int
    votes: dict[int, int]
    moved: int
    unanimous: bool

    def vote_fraction(self) -> float:
        total = sum(self.votes.values())
        return self.votes[self.identified_label] / total


def identify_class(retained: VectorStore, request: UnlearnRequest):
    """Identify the class the exemplars belong to.

    Each exemplar casts a KNN-classification vote over the retained
    store; the majority label wins. Ties break by the higher summed
    similarity the winning votes carried, then by lower label.

    Returns (label, votes) where votes maps label -> exemplar count.
    """
    if len(retained) == 0:
        raise EmptyStore(f"store {retained.name!r} is empty")
    votes: dict[int, int] = {}
    strength: dict[int, float] = {}
    for ex in request.exemplars:
        neighbours = retained.knn(ex, request.k)
        per: dict[int, int] = {}
        sims: dict[int, float] = {}
        for rec, sim in neighbours:
            per[rec.label] = per.get(rec.label, 0) + 1
            sims[rec.label] = sims.get(rec.label, 0.0) + sim
        verdict = min(per, key=lambda lb: (-per[lb], -sims[lb], lb))
        votes[verdict] = votes.get(verdict, 0) + 1
        strength[verdict] = strength.get(verdict, 0.0) + sims[verdict]
    winner = min(votes, key=lambda lb: (-votes[lb], -strength[lb], lb))
    return winner, votes


def unlearn(retained: VectorStore, unlearned: VectorStore,
            request: UnlearnRequest) -> MigrationReport:
    """Identify the exemplars' class and migrate it out of the retained
    store. The migration is atomic; the report carries the vote split so
    callers can inspect low-confidence identifications."""
    label, votes = identify_class(retained, request)
    moved = migrate_class(retained, unlearned, label)
    return MigrationReport(
        identified_label=label,
        votes=votes,
        moved=moved,
        unanimous=len(votes) == 1,
    )


def max_similarity(unlearned: VectorStore, v_in, mode: str = "record-max"):
    """Best cosine similarity of ``v_in`` against the unlearned store,
    or None when the store is empty.

    mode "record-max" scans records; "centroid" scans class centroids.
    """
    if mode not in ("record-max", "centroid"):
        raise ArgumentError(f"unknown filter mode {mode!r}")
    if len(unlearned) == 0:
        return None
    v = as_vector(v_in)
    if v.shape[0] != unlearned.dim:
        raise DimensionMismatch(
            f"input dim {v.shape[0]} != store dim {unlearned.dim}"
        )
    if mode == "record-max":
        _, sims = unlearned._similarities(v)
        return float(sims.max())
    best = -1.0
    for label in unlearned.labels():
        c = unlearned.centroid_of(label)
        sim = float(np.dot(c, v) / (np.linalg.norm(c) * np.linalg.norm(v)))
        best = max(best, min(1.0, max(-1.0, sim)))
    return best


def membership_filter(unlearned: VectorStore, v_in, threshold: float,
                      mode: str = "record-max") -> bool:
    """True when ``v_in`` looks like a member of an unlearned class.

    An empty unlearned store flags nothing.
    """
    best = max_similarity(unlearned, v_in, mode)
    return best is not None and best >= threshold


@dataclass(frozen=True)
class CalibrationPoint:
    """Filter confusion counts at one threshold.

    Positive = retained-class input passing the filter, so recall is the
    fraction of retained inputs that pass and specificity the fraction of
    unlearned inputs that get flagged.
    """

    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else float("nan")

    @property
    def specificity(self) -> float:
        denom = self.fp + self.tn
        return self.tn / denom if denom else float("nan")


@dataclass(frozen=True)
class FilterCalibration:
    points: tuple

    def to_csv_text(self) -> str:
        lines = ["threshold,tp,fp,tn,fn,recall,specificity"]
        for p in self.points:
            lines.append(
                f"{p.threshold!r},{p.tp},{p.fp},{p.tn},{p.fn},"
                f"{p.recall!r},{p.specificity!r}"
            )
        return "\n".join(lines) + "\n"


def sweep_threshold(unlearned: VectorStore, labeled_inputs, grid,
                    mode: str = "record-max") -> FilterCalibration:
    """Evaluate the filter across a threshold grid.

    ``labeled_inputs`` is a sequence of (vector, is_unlearned) pairs; the
    grid must be non-empty and ascending. Per-input best similarities are
    computed once, so the sweep costs one store scan per input.
    """
    grid = [float(s) for s in grid]
    if not grid:
        raise ArgumentError("threshold grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ArgumentError("threshold grid must be strictly ascending")
    labeled_inputs = list(labeled_inputs)
    if not labeled_inputs:
        raise ArgumentError("no inputs to sweep")
    best: list[tuple[float | None, bool]] = []
    for vec, is_unlearned in labeled_inputs:
        best.append((max_similarity(unlearned, vec, mode), bool(is_unlearned)))
    points = []
    for s in grid:
        tp = fp = tn = fn = 0
        for sim, is_unlearned in best:
            flagged = sim is not None and sim >= s
            if is_unlearned:
                if flagged:
                    tn += 1
                else:
                    fp += 1
            else:
                if flagged:
                    fn += 1
                else:
                    tp += 1
        points.append(CalibrationPoint(threshold=s, tp=tp, fp=fp, tn=tn, fn=fn))
    return FilterCalibration(points=tuple(points))


def calibrate_threshold(calibration: FilterCalibration,
                        target_recall: float = 0.9186,
                        target_specificity: float = 0.709) -> float:
    """Pick an operating threshold from a sweep.

    Preferred choice: the smallest grid threshold whose recall and
    specificity both meet their floors — the most aggressive flagging
    that still honours the retained-service guarantee (recall rises and
    specificity falls with the threshold, so the smallest feasible
    threshold also maximises specificity within the feasible band).
    When no grid point satisfies both floors, fall back to the point
    closest to the target pair, ties preferring the larger threshold.

    A metric that is undefined (no inputs on that side) never blocks
    feasibility and counts as zero distance in the fallback.
    """
    if not calibration.points:
        raise ArgumentError("empty calibration")
    feasible = [
        p for p in calibration.points
        if (p.recall != p.recall or p.recall >= target_recall)
        and (p.specificity != p.specificity or p.specificity >= target_specificity)
    ]
    if feasible:
        return min(feasible, key=lambda p: p.threshold).threshold
    best_s = None
    best_d = None
    for p in calibration.points:
        d = 0.0
        if p.recall == p.recall:
            d += (p.recall - target_recall) ** 2
        if p.specificity == p.specificity:
            d += (p.specificity - target_specificity) ** 2
        if best_d is None or d < best_d or (d == best_d and p.threshold > best_s):
            best_s, best_d = p.threshold, d
    return best_s
