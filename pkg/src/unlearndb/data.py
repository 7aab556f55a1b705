"""Embedding file format, synthetic data generator, and train/test split.

The on-disk format is the engine's single exchange surface: little-endian
throughout, a fixed 20-byte header followed by packed records.

    header: magic ``ECMU`` (4 bytes) | version u32 | dim u32 | count u64
    record: id i64 | label u32 | dim * f32

Payload floats are stored at 32-bit precision and widened to float64 on
load, so ``read(write(records))`` is bit-exact whenever the input values
are 32-bit representable (everything the generator or another exporter
produces).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DataError, FormatError
from .store import VectorRecord

MAGIC = b"ECMU"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_REC_FIXED = struct.Struct("<qI")
_LABEL_MAX = 2**32 - 1


def write_embeddings(path, records) -> int:
    """Write records to ``path``. Returns the number of records written.

    Inputs are validated the same way a reader would: consistent dims,
    unique ids, finite payloads, labels within u32.
    """
    records = list(records)
    if not records:
        raise ArgumentError("refusing to write an empty embedding file")
    dim = records[0].vector.shape[0]
    seen: set[int] = set()
    chunks = [_HEADER.pack(MAGIC, VERSION, dim, len(records))]
    for r in records:
        if r.vector.shape[0] != dim:
            raise ArgumentError(
                f"record {r.id} has dim {r.vector.shape[0]}, expected {dim}"
            )
        if r.id in seen:
            raise DataError(f"duplicate record id {r.id}")
        seen.add(r.id)
        if not 0 <= r.label <= _LABEL_MAX:
            raise ArgumentError(f"label {r.label} outside u32 range")
        with np.errstate(over="ignore"):
            payload = r.vector.astype("<f4")
        if not np.all(np.isfinite(payload)):
            raise DataError(f"record {r.id} payload is NaN/inf at 32-bit precision")
        if not np.any(payload):
            raise DataError(f"record {r.id} is a zero vector")
        chunks.append(_REC_FIXED.pack(r.id, r.label))
        chunks.append(payload.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))
    return len(records)


def read_embeddings(path) -> list[VectorRecord]:
    """Read and validate an embedding file.

    Raises:
        FormatError: bad magic/version/dim, truncation, or trailing bytes,
            with the byte offset of the fault.
        DataError: NaN/inf payload, duplicate ids, or a zero vector.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(
            f"file too short for header: {len(blob)} bytes", offset=len(blob)
        )
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if dim == 0:
        raise FormatError("dim must be positive", offset=8)
    rec_size = _REC_FIXED.size + 4 * dim
    want = _HEADER.size + count * rec_size
    if len(blob) < want:
        raise FormatError(
            f"truncated: {count} records declared, file ends early",
            offset=len(blob),
        )
    if len(blob) > want:
        raise FormatError("trailing bytes after last record", offset=want)
    records: list[VectorRecord] = []
    seen: set[int] = set()
    off = _HEADER.size
    for i in range(count):
        rid, label = _REC_FIXED.unpack_from(blob, off)
        payload = np.frombuffer(
            blob, dtype="<f4", count=dim, offset=off + _REC_FIXED.size
        )
        if not np.all(np.isfinite(payload)):
            raise DataError(f"record {rid} payload contains NaN/inf")
        if rid in seen:
            raise DataError(f"duplicate record id {rid}")
        if not np.any(payload):
            raise DataError(f"record {rid} is a zero vector")
        seen.add(rid)
        records.append(
            VectorRecord(id=rid, label=label, vector=payload.astype(np.float64))
        )
        off += rec_size
    return records


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic cluster generator."""

    n_classes: int
    per_class: int
    dim: int
    spread: float
    seed: int

    def __post_init__(self):
        if self.n_classes < 1:
            raise ArgumentError(f"n_classes must be positive, got {self.n_classes}")
        if self.per_class < 1:
            raise ArgumentError(f"per_class must be positive, got {self.per_class}")
        if self.dim < 1:
            raise ArgumentError(f"dim must be positive, got {self.dim}")
        if not 0 < self.spread < 10:
            raise ArgumentError(f"spread must be in (0, 10), got {self.spread}")
        if not 0 <= self.seed < 2**64:
            raise ArgumentError(f"seed must fit u64, got {self.seed}")


def generate_synthetic(spec: SyntheticSpec) -> list[VectorRecord]:
    """Unit-norm clusters around random unit-norm centroid directions.

    Class ``c`` members are ``normalize(centroid_c + N(0, spread^2))``.
    Labels run 0..n_classes-1, ids are sequential from 0. Output values
    are exactly 32-bit representable so file round-trips are identity.
    """
    rng = np.random.default_rng(spec.seed)
    dirs = rng.standard_normal((spec.n_classes, spec.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    records: list[VectorRecord] = []
    rid = 0
    for c in range(spec.n_classes):
        noise = rng.standard_normal((spec.per_class, spec.dim)) * spec.spread
        members = dirs[c] + noise
        norms = np.linalg.norm(members, axis=1, keepdims=True)
        if not np.all(norms > 0):
            raise DataError("degenerate member collapsed to the zero vector")
        members /= norms
        members = members.astype(np.float32).astype(np.float64)
        for row in members:
            records.append(VectorRecord(id=rid, label=c, vector=row))
            rid += 1
    return records


def split(records, test_fraction: float, seed: int):
    """Deterministic stratified split into (train, test).

    Each class contributes round(n * test_fraction) test records, clamped
    so both sides keep at least one record. Classes need >= 2 records.
    """
    if not 0 < test_fraction < 1:
        raise ArgumentError(f"test_fraction must be in (0, 1), got {test_fraction}")
    records = list(records)
    if not records:
        raise ArgumentError("nothing to split")
    by_label: dict[int, list[VectorRecord]] = {}
    for r in records:
        by_label.setdefault(r.label, []).append(r)
    rng = np.random.default_rng(seed)
    train: list[VectorRecord] = []
    test: list[VectorRecord] = []
    for label in sorted(by_label):
        members = sorted(by_label[label], key=lambda r: r.id)
        if len(members) < 2:
            raise ArgumentError(
                f"class {label} has {len(members)} record(s); need at least 2"
            )
        n_test = int(round(len(members) * test_fraction))
        n_test = min(len(members) - 1, max(1, n_test))
        picks = rng.permutation(len(members))
        chosen = set(picks[:n_test].tolist())
        for i, rec in enumerate(members):
            (test if i in chosen else train).append(rec)
    train.sort(key=lambda r: r.id)
    test.sort(key=lambda r: r.id)
    return train, test
