"""Writer (and verifying reader) for the frozen embedding-file layout.

This byte layout is the exporter's only contract with the consuming
engine — both sides implement it independently against the same frozen
definition:

    header: magic ``ECMU`` (4 bytes) | version u32 | dim u32 | count u64
    record: id i64 | label u32 | dim * f32

Little-endian throughout. Payload floats are exact 32-bit values, so a
file read back and rewritten is bit-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FormatError

MAGIC = b"ECMU"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_REC_FIXED = struct.Struct("<qI")
_ID_MIN, _ID_MAX = -(2**63), 2**63 - 1
_LABEL_MAX = 2**32 - 1


@dataclass(frozen=True)
class ExportRecord:
    id: int
    label: int
    vector: np.ndarray  # float32, 1-D


class EmbeddingWriter:
    """Streams records with a known total count into one file."""

    def __init__(self, path, dim: int, count: int):
        if dim < 1:
            raise ArgumentError(f"dim must be positive, got {dim}")
        if count < 1:
            raise ArgumentError(f"count must be positive, got {count}")
        self._dim = dim
        self._count = count
        self._written = 0
        self._seen: set[int] = set()
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, dim, count))

    def write(self, record_id: int, label: int, vector: np.ndarray) -> None:
        if self._written >= self._count:
            raise ArgumentError(f"writer already holds {self._count} records")
        if not _ID_MIN <= record_id <= _ID_MAX:
            raise ArgumentError(f"id {record_id} outside i64 range")
        if record_id in self._seen:
            raise ArgumentError(f"duplicate record id {record_id}")
        if not 0 <= label <= _LABEL_MAX:
            raise ArgumentError(f"label {label} outside u32 range")
        v = np.ascontiguousarray(vector, dtype="<f4")
        if v.ndim != 1 or v.shape[0] != self._dim:
            raise ArgumentError(
                f"record {record_id}: expected a 1-D vector of dim {self._dim}, "
                f"got shape {tuple(v.shape)}"
            )
        if not np.all(np.isfinite(v)):
            raise ArgumentError(f"record {record_id} payload is not finite")
        if not np.any(v):
            # The consuming engine indexes by cosine similarity and rejects
            # zero vectors, so refusing them here keeps every export readable.
            raise ArgumentError(f"record {record_id} is a zero vector")
        self._seen.add(record_id)
        self._fh.write(_REC_FIXED.pack(record_id, label))
        self._fh.write(v.tobytes())
        self._written += 1

    def close(self) -> None:
        try:
            if self._written != self._count:
                raise ArgumentError(
                    f"declared {self._count} records but wrote {self._written}"
                )
        finally:
            self._fh.close()

    def __enter__(self) -> "EmbeddingWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def write_file(path, records) -> int:
    """Write fully materialized records; returns the number written."""
    records = list(records)
    if not records:
        raise ArgumentError("refusing to write an empty embedding file")
    dim = int(np.asarray(records[0].vector).shape[0])
    with EmbeddingWriter(path, dim, len(records)) as writer:
        for r in records:
            writer.write(r.id, r.label, r.vector)
    return len(records)


def read_file(path) -> list[ExportRecord]:
    """Parse and validate an embedding file (used to verify exports).

    Checks structure (magic, version, dim, exact length) and record
    semantics (finite payloads, unique ids, no zero vectors); every
    rejection is a :class:`FormatError` carrying the byte offset of the
    fault.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(
            f"file too short for a header: {len(blob)} bytes", len(blob)
        )
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if dim == 0:
        raise FormatError("dim must be positive", 8)
    record_size = _REC_FIXED.size + 4 * dim
    expected = _HEADER.size + count * record_size
    if len(blob) < expected:
        raise FormatError(
            f"truncated: expected {expected} bytes, have {len(blob)}", len(blob)
        )
    if len(blob) > expected:
        raise FormatError(
            f"{len(blob) - expected} trailing bytes after the last record", expected
        )
    out = []
    seen: set[int] = set()
    offset = _HEADER.size
    for _ in range(count):
        record_id, label = _REC_FIXED.unpack_from(blob, offset)
        vec = np.frombuffer(
            blob, dtype="<f4", count=dim, offset=offset + _REC_FIXED.size
        )
        if not np.all(np.isfinite(vec)):
            raise FormatError(
                f"record {record_id} payload is not finite",
                offset + _REC_FIXED.size,
            )
        if record_id in seen:
            raise FormatError(f"duplicate record id {record_id}", offset)
        if not np.any(vec):
            raise FormatError(
                f"record {record_id} is a zero vector", offset + _REC_FIXED.size
            )
        seen.add(record_id)
        out.append(ExportRecord(record_id, label, vec.copy()))
        offset += record_size
    return out
