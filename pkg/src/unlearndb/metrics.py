"""Evaluation metrics, the analytic accuracy model, and report output.

Accuracy is reported separately for retained-class inputs (acc_cr) and
unlearned-class inputs (acc_cf). When nothing has been unlearned there is
no acc_cf to report and the field is carried as absent rather than zero.

Reports serialize two ways: line-oriented ``key=value`` text and JSON.
Both are byte-deterministic for a fixed configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .inference import Prediction, Strategy, predict
from .store import VectorStore

_U64 = 2**64 - 1

KV_ABSENT = "na"


@dataclass(frozen=True)
class MetricsReport:
    """Split accuracies plus enough raw counts to audit them."""

    acc_cr: float | None
    acc_cf: float | None
    per_class_acc: dict[int, float]
    confusion: dict[tuple[int, int], int]
    n_eval: int
    n_retained_eval: int
    n_unlearned_eval: int
    overall_accuracy: float
    seed: int
    strategy: str
    threshold: float

    def to_kv_text(self) -> str:
        def fmt(x):
            return KV_ABSENT if x is None else repr(x)

        lines = [
            f"acc_cr={fmt(self.acc_cr)}",
            f"acc_cf={fmt(self.acc_cf)}",
            f"n_eval={self.n_eval}",
            f"seed={self.seed}",
            f"strategy={self.strategy}",
            f"threshold={self.threshold!r}",
        ]
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        doc = {
            "acc_cr": self.acc_cr,
            "acc_cf": self.acc_cf,
            "n_eval": self.n_eval,
            "seed": self.seed,
            "strategy": self.strategy,
            "threshold": self.threshold,
            "n_retained_eval": self.n_retained_eval,
            "n_unlearned_eval": self.n_unlearned_eval,
            "overall_accuracy": self.overall_accuracy,
            "per_class_acc": {str(k): v for k, v in sorted(self.per_class_acc.items())},
            "confusion": [
                [t, p, c] for (t, p), c in sorted(self.confusion.items())
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def report_from_json(text: str) -> MetricsReport:
    doc = json.loads(text)
    return MetricsReport(
        acc_cr=doc["acc_cr"],
        acc_cf=doc["acc_cf"],
        per_class_acc={int(k): v for k, v in doc["per_class_acc"].items()},
        confusion={(t, p): c for t, p, c in doc["confusion"]},
        n_eval=doc["n_eval"],
        n_retained_eval=doc["n_retained_eval"],
        n_unlearned_eval=doc["n_unlearned_eval"],
        overall_accuracy=doc["overall_accuracy"],
        seed=doc["seed"],
        strategy=doc["strategy"],
        threshold=doc["threshold"],
    )


def evaluate(test_records, retained: VectorStore, unlearned: VectorStore, *,
             threshold: float, strategy, model, seed: int,
             filter_mode: str = "record-max",
             inverse_weighting: str = "reciprocal") -> MetricsReport:
    """Run the full predict pipeline over labeled test records.

    Every true label must have been learned at some point (resident in
    either store). Randomness is split per sample from the root seed, so
    results do not depend on evaluation order and reruns are identical.
    """
    records = list(test_records)
    if not records:
        raise ArgumentError("empty evaluation set")
    if not isinstance(strategy, Strategy):
        strategy = Strategy(strategy)
    learned_cr = set(retained.labels())
    learned_cf = set(unlearned.labels())
    universe = learned_cr | learned_cf
    for r in records:
        if r.label not in universe:
            raise ArgumentError(
                f"record {r.id} has label {r.label}, which was never learned"
            )
    per_class_total: dict[int, int] = {}
    per_class_hit: dict[int, int] = {}
    confusion: dict[tuple[int, int], int] = {}
    hits_cr = hits_cf = n_cr = n_cf = 0
    for r in records:
        # stream keyed by (root seed, record id): evaluation order cannot
        # change any draw (ids are masked to unsigned for SeedSequence)
        ss = np.random.SeedSequence([seed & _U64, r.id & _U64])
        rng = np.random.default_rng(ss)
        pred: Prediction = predict(
            r.vector, retained, unlearned,
            threshold=threshold, strategy=strategy, model=model, rng=rng,
            record_id=r.id, filter_mode=filter_mode,
            inverse_weighting=inverse_weighting,
        )
        hit = pred.label == r.label
        per_class_total[r.label] = per_class_total.get(r.label, 0) + 1
        per_class_hit[r.label] = per_class_hit.get(r.label, 0) + int(hit)
        key = (r.label, pred.label)
        confusion[key] = confusion.get(key, 0) + 1
        if r.label in learned_cf:
            n_cf += 1
            hits_cf += int(hit)
        else:
            n_cr += 1
            hits_cr += int(hit)
    per_class_acc = {
        lb: per_class_hit[lb] / per_class_total[lb] for lb in sorted(per_class_total)
    }
    return MetricsReport(
        acc_cr=(hits_cr / n_cr) if n_cr else None,
        acc_cf=(hits_cf / n_cf) if n_cf else None,
        per_class_acc=per_class_acc,
        confusion=confusion,
        n_eval=len(records),
        n_retained_eval=n_cr,
        n_unlearned_eval=n_cf,
        overall_accuracy=(hits_cr + hits_cf) / len(records),
        seed=seed,
        strategy=strategy.value,
        threshold=float(threshold),
    )


def _check_unit(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ArgumentError(f"{name} must be in [0, 1], got {x}")
    return x


def expected_cr_accuracy(recall: float, acc_t: float) -> float:
    """Retained-side accuracy predicted from the filter's recall and the
    model's base accuracy: only inputs that pass the filter can be
    answered at model accuracy."""
    return _check_unit("recall", recall) * _check_unit("acc_t", acc_t)


def expected_cf_accuracy(specificity: float, acc_t: float,
                         n_classes: int) -> float:
    """Unlearned-side accuracy under the uniform strategy: leaked inputs
    are answered at model accuracy, flagged inputs hit the true class one
    time in n_classes."""
    s = _check_unit("specificity", specificity)
    a = _check_unit("acc_t", acc_t)
    if n_classes < 1:
        raise ArgumentError(f"n_classes must be positive, got {n_classes}")
    return (1.0 - s) * a + s * (1.0 / n_classes)
