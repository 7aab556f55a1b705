import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unlearndb import (
    ArgumentError,
    DimensionMismatch,
    EmptyStore,
    SyntheticSpec,
    UnlearnRequest,
    VectorRecord,
    VectorStore,
    calibrate_threshold,
    generate_synthetic,
    identify_class,
    max_similarity,
    membership_filter,
    pair_stores,
    sweep_threshold,
    unlearn,
)
from unlearndb.engine import CalibrationPoint, FilterCalibration

from .conftest import make_records


def _clustered_pair(n_classes=4, per_class=30, dim=16, seed=1):
    records = generate_synthetic(
        SyntheticSpec(n_classes=n_classes, per_class=per_class, dim=dim,
                      spread=0.05, seed=seed)
    )
    retained = VectorStore("retained", dim=dim)
    unlearned = VectorStore("unlearned", dim=dim)
    pair_stores(retained, unlearned)
    retained.insert_many(records)
    return retained, unlearned, records


# -- requests and identification -------------------------------------------------


def test_request_validation():
    with pytest.raises(ArgumentError):
        UnlearnRequest(exemplars=())
    with pytest.raises(DimensionMismatch):
        UnlearnRequest(exemplars=([1.0, 0.0], [1.0, 0.0, 0.0]))
    with pytest.raises(ArgumentError):
        UnlearnRequest(exemplars=([1.0, 0.0],), k=0)


def test_identify_class_unanimous_on_clusters():
    retained, _, records = _clustered_pair()
    exemplars = tuple(r.vector for r in records if r.label == 2)[:10]
    label, votes = identify_class(retained, UnlearnRequest(exemplars, k=5))
    assert label == 2
    assert votes == {2: 10}


def test_identify_class_empty_store():
    store = VectorStore("retained", dim=2)
    with pytest.raises(EmptyStore):
        identify_class(store, UnlearnRequest(([1.0, 0.0],), k=1))


def test_identify_tie_breaks_to_lower_label():
    store = VectorStore("retained", dim=2)
    store.insert(VectorRecord(0, 7, [1.0, 0.0]))
    store.insert(VectorRecord(1, 3, [0.0, 1.0]))
    # exemplar equidistant from both singleton classes
    label, votes = identify_class(store, UnlearnRequest(([1.0, 1.0],), k=2))
    assert label == 3
    assert votes == {3: 1}


def test_unlearn_migrates_identified_class():
    retained, unlearned, records = _clustered_pair()
    n_class1 = sum(1 for r in records if r.label == 1)
    exemplars = tuple(r.vector for r in records if r.label == 1)[:8]
    report = unlearn(retained, unlearned, UnlearnRequest(exemplars, k=7))
    assert report.identified_label == 1
    assert report.moved == n_class1
    assert report.unanimous and report.vote_fraction() == 1.0
    assert 1 not in retained.labels()
    assert unlearned.labels() == [1]
    assert len(unlearned) == n_class1


# -- membership filter -------------------------------------------------------------


def test_max_similarity_empty_store_is_none():
    store = VectorStore("unlearned", dim=2)
    assert max_similarity(store, [1.0, 0.0]) is None
    assert membership_filter(store, [1.0, 0.0], threshold=-1.0) is False


def test_max_similarity_record_max_oracle(rng):
    store = VectorStore("unlearned", dim=8)
    records = make_records(rng, 50, 8, n_classes=3)
    store.insert_many(records)
    query = rng.standard_normal(8)
    want = max(
        float(np.dot(r.vector, query)
              / (np.linalg.norm(r.vector) * np.linalg.norm(query)))
        for r in records
    )
    got = max_similarity(store, query, mode="record-max")
    assert got == pytest.approx(want, abs=1e-12)


def test_max_similarity_centroid_oracle(rng):
    store = VectorStore("unlearned", dim=8)
    records = make_records(rng, 50, 8, n_classes=3)
    store.insert_many(records)
    query = rng.standard_normal(8)
    want = max(
        float(np.dot(c, query) / (np.linalg.norm(c) * np.linalg.norm(query)))
        for c in store.centroids().values()
    )
    got = max_similarity(store, query, mode="centroid")
    assert got == pytest.approx(want, abs=1e-12)


def test_max_similarity_rejects_bad_mode_and_dim():
    store = VectorStore("unlearned", dim=2)
    store.insert(VectorRecord(0, 0, [1.0, 0.0]))
    with pytest.raises(ArgumentError):
        max_similarity(store, [1.0, 0.0], mode="median")
    with pytest.raises(DimensionMismatch):
        max_similarity(store, [1.0, 0.0, 0.0])


def test_filter_boundary_is_inclusive():
    store = VectorStore("unlearned", dim=2)
    store.insert(VectorRecord(0, 0, [2.0, 0.0]))
    assert membership_filter(store, [5.0, 0.0], threshold=1.0) is True
    assert membership_filter(store, [0.0, 1.0], threshold=0.0) is True
    assert membership_filter(store, [-1.0, 0.0], threshold=0.0) is False


@given(st.integers(0, 2**32 - 1))
def test_filter_flagging_monotone_in_threshold(seed):
    rng = np.random.default_rng(seed)
    store = VectorStore("unlearned", dim=6)
    store.insert_many(make_records(rng, int(rng.integers(1, 40)), 6, 3))
    query = rng.standard_normal(6)
    grid = np.linspace(-1.0, 1.0, 21)
    flags = [membership_filter(store, query, s) for s in grid]
    # once the flag drops it never comes back as s rises
    for lo, hi in zip(flags, flags[1:]):
        assert lo or not hi


# -- sweeps -----------------------------------------------------------------------


def _labeled_inputs(rng, store_dim, n=40):
    vecs = rng.standard_normal((n, store_dim))
    return [(v, bool(rng.integers(2))) for v in vecs]


def test_sweep_counts_are_constant_per_row(rng):
    store = VectorStore("unlearned", dim=6)
    store.insert_many(make_records(rng, 30, 6, 2))
    labeled = _labeled_inputs(rng, 6)
    n_unlearned = sum(1 for _, u in labeled if u)
    n_retained = len(labeled) - n_unlearned
    cal = sweep_threshold(store, labeled, [0.1, 0.5, 0.9])
    assert len(cal.points) == 3
    for p in cal.points:
        assert p.tp + p.fn == n_retained
        assert p.fp + p.tn == n_unlearned


@given(st.integers(0, 2**32 - 1))
def test_sweep_recall_up_specificity_down(seed):
    rng = np.random.default_rng(seed)
    store = VectorStore("unlearned", dim=5)
    store.insert_many(make_records(rng, int(rng.integers(1, 30)), 5, 2))
    labeled = _labeled_inputs(rng, 5, n=25)
    grid = sorted(set(float(x) for x in rng.uniform(-1, 1, size=12)))
    if len(grid) < 2:
        return
    cal = sweep_threshold(store, labeled, grid)
    recalls = [p.recall for p in cal.points]
    specs = [p.specificity for p in cal.points]
    for a, b in zip(recalls, recalls[1:]):
        assert math.isnan(a) or a <= b
    for a, b in zip(specs, specs[1:]):
        assert math.isnan(a) or a >= b


def test_sweep_validation(rng):
    store = VectorStore("unlearned", dim=2)
    store.insert(VectorRecord(0, 0, [1.0, 0.0]))
    labeled = [([1.0, 0.0], True)]
    with pytest.raises(ArgumentError):
        sweep_threshold(store, labeled, [])
    with pytest.raises(ArgumentError):
        sweep_threshold(store, labeled, [0.5, 0.5])
    with pytest.raises(ArgumentError):
        sweep_threshold(store, labeled, [0.9, 0.1])
    with pytest.raises(ArgumentError):
        sweep_threshold(store, [], [0.5])


def test_sweep_csv_shape(rng):
    store = VectorStore("unlearned", dim=4)
    store.insert_many(make_records(rng, 10, 4, 2))
    cal = sweep_threshold(store, _labeled_inputs(rng, 4, n=10), [0.2, 0.8])
    lines = cal.to_csv_text().splitlines()
    assert lines[0] == "threshold,tp,fp,tn,fn,recall,specificity"
    assert len(lines) == 3
    assert lines[1].startswith("0.2,")


def test_sweep_empty_store_never_flags(rng):
    store = VectorStore("unlearned", dim=3)
    labeled = [([1.0, 0.0, 0.0], False), ([0.0, 1.0, 0.0], True)]
    cal = sweep_threshold(store, labeled, [0.0, 0.5])
    for p in cal.points:
        assert p.tp == 1 and p.fn == 0  # retained input passes
        assert p.fp == 1 and p.tn == 0  # unlearned input leaks


# -- calibration --------------------------------------------------------------------


def _point(s, recall, specificity, n=100):
    tp = round(recall * n)
    tn = round(specificity * n)
    return CalibrationPoint(threshold=s, tp=tp, fn=n - tp, tn=tn, fp=n - tn)


def test_calibration_picks_smallest_feasible_threshold():
    cal = FilterCalibration(points=(
        _point(0.1, recall=0.50, specificity=1.00),
        _point(0.2, recall=0.93, specificity=1.00),
        _point(0.3, recall=0.97, specificity=0.95),
        _point(0.4, recall=1.00, specificity=0.71),
        _point(0.5, recall=1.00, specificity=0.20),
    ))
    assert calibrate_threshold(cal) == 0.2


def test_calibration_falls_back_to_closest_point():
    # nothing reaches the specificity floor: take the closest pair
    cal = FilterCalibration(points=(
        _point(0.1, recall=0.10, specificity=0.60),
        _point(0.2, recall=0.95, specificity=0.55),
        _point(0.3, recall=1.00, specificity=0.10),
    ))
    assert calibrate_threshold(cal) == 0.2


def test_calibration_fallback_tie_prefers_larger_threshold():
    cal = FilterCalibration(points=(
        _point(0.1, recall=0.50, specificity=0.50),
        _point(0.9, recall=0.50, specificity=0.50),
    ))
    assert calibrate_threshold(cal) == 0.9


def test_calibration_ignores_undefined_sides():
    # no unlearned inputs at all: specificity is NaN and must not block
    pts = (
        CalibrationPoint(threshold=0.3, tp=80, fn=20, tn=0, fp=0),
        CalibrationPoint(threshold=0.6, tp=95, fn=5, tn=0, fp=0),
    )
    assert calibrate_threshold(FilterCalibration(points=pts)) == 0.6


def test_calibration_custom_floors_and_empty():
    cal = FilterCalibration(points=(_point(0.5, 0.8, 0.8),))
    assert calibrate_threshold(cal, target_recall=0.7, target_specificity=0.7) == 0.5
    with pytest.raises(ArgumentError):
        calibrate_threshold(FilterCalibration(points=()))


# -- self-recall ----------------------------------------------------------------------


def test_migrated_vectors_flagged_at_near_one_threshold():
    retained, unlearned, records = _clustered_pair(seed=6)
    exemplars = tuple(r.vector for r in records if r.label == 0)[:6]
    unlearn(retained, unlearned, UnlearnRequest(exemplars, k=5))
    migrated = [r for r in unlearned.records()]
    assert migrated
    # each migrated vector matches itself, so its max similarity sits at
    # 1.0 up to float roundoff — far above any calibrated threshold
    for r in migrated:
        assert membership_filter(unlearned, r.vector, threshold=1.0 - 1e-9,
                                 mode="record-max")
