"""Byte-format tests: golden layout, round-trips, corruption rejection.

The embedding file layout is frozen; these tests pin it byte-for-byte with
hand-packed buffers so any drift from the published layout fails loudly.
"""

from __future__ import annotations

import struct

import numpy as np
import pytest

import unlearndb
from embedding_exporter import (
    ArgumentError,
    EmbeddingWriter,
    ExportRecord,
    FormatError,
    read_file,
    write_file,
)


def _pack_header(magic: bytes, version: int, dim: int, count: int) -> bytes:
    return struct.pack("<4sIIQ", magic, version, dim, count)


def _pack_record(rec_id: int, label: int, values: list[float]) -> bytes:
    return struct.pack("<qI", rec_id, label) + struct.pack(
        f"<{len(values)}f", *values
    )


def test_golden_bytes_match_hand_packed_layout(tmp_path):
    # 1.5 and -2.25 are exactly representable in float32, so the byte
    # comparison has no rounding slack.
    expected = _pack_header(b"ECMU", 1, 2, 2)
    expected += _pack_record(7, 3, [1.5, -2.25])
    expected += _pack_record(-1, 0, [0.0, 65536.0])

    path = tmp_path / "golden.emb"
    write_file(
        path,
        [
            ExportRecord(7, 3, np.array([1.5, -2.25], dtype=np.float32)),
            ExportRecord(-1, 0, np.array([0.0, 65536.0], dtype=np.float32)),
        ],
    )
    assert path.read_bytes() == expected


def test_round_trip_preserves_ids_labels_vectors(tmp_path):
    rng = np.random.default_rng(11)
    records = [
        ExportRecord(i * 13 - 5, i % 4, rng.normal(size=6).astype(np.float32))
        for i in range(50)
    ]
    path = tmp_path / "rt.emb"
    write_file(path, records)
    back = read_file(path)
    assert len(back) == 50
    for orig, got in zip(records, back):
        assert got.id == orig.id
        assert got.label == orig.label
        assert got.vector.dtype == np.float32
        assert np.array_equal(got.vector, orig.vector)


def test_primary_engine_reads_exporter_output(tmp_path):
    """Cross-package contract: the consumer parses our bytes with no errors."""
    records = [
        ExportRecord(i, i % 3, np.full(4, float(i + 1), dtype=np.float32))
        for i in range(9)
    ]
    path = tmp_path / "cross.emb"
    write_file(path, records)
    loaded = unlearndb.read_embeddings(path)
    assert [r.id for r in loaded] == list(range(9))
    assert [r.label for r in loaded] == [i % 3 for i in range(9)]
    assert all(r.vector.shape == (4,) for r in loaded)


def test_exporter_reads_primary_engine_output(tmp_path):
    """And the reverse: files written by the consumer parse here."""
    recs = [
        unlearndb.VectorRecord(
            id=i, label=i % 2, vector=np.ones(3, dtype=np.float32) * (i + 1)
        )
        for i in range(5)
    ]
    path = tmp_path / "reverse.emb"
    unlearndb.write_embeddings(path, recs)
    back = read_file(path)
    assert [r.id for r in back] == list(range(5))
    assert [r.label for r in back] == [0, 1, 0, 1, 0]


@pytest.mark.parametrize(
    "blob, offset_hint",
    [
        (b"EC", "byte offset 2"),  # header shorter than 20 bytes
        (_pack_header(b"NOPE", 1, 2, 0), "byte offset 0"),  # bad magic
        (_pack_header(b"ECMU", 9, 2, 0), "byte offset 4"),  # bad version
        (_pack_header(b"ECMU", 1, 0, 0), "byte offset 8"),  # zero dim
        # declares one record but carries no payload -> truncation at EOF
        (_pack_header(b"ECMU", 1, 2, 1), "byte offset 20"),
        # full record plus trailing garbage -> error at expected end
        (
            _pack_header(b"ECMU", 1, 1, 1) + _pack_record(0, 0, [1.0]) + b"x",
            "byte offset 36",
        ),
    ],
)
def test_malformed_files_rejected_with_offset(tmp_path, blob, offset_hint):
    path = tmp_path / "bad.emb"
    path.write_bytes(blob)
    with pytest.raises(FormatError) as exc_info:
        read_file(path)
    assert offset_hint in str(exc_info.value)


def test_non_finite_payload_rejected(tmp_path):
    blob = _pack_header(b"ECMU", 1, 2, 1) + _pack_record(0, 0, [1.0, float("nan")])
    path = tmp_path / "nan.emb"
    path.write_bytes(blob)
    with pytest.raises(FormatError):
        read_file(path)


def test_duplicate_ids_rejected_on_read(tmp_path):
    blob = _pack_header(b"ECMU", 1, 1, 2)
    blob += _pack_record(4, 0, [1.0])
    blob += _pack_record(4, 1, [2.0])
    path = tmp_path / "dup.emb"
    path.write_bytes(blob)
    with pytest.raises(FormatError):
        read_file(path)


def test_zero_vector_rejected_on_read(tmp_path):
    blob = _pack_header(b"ECMU", 1, 2, 1) + _pack_record(0, 0, [0.0, 0.0])
    path = tmp_path / "zero.emb"
    path.write_bytes(blob)
    with pytest.raises(FormatError):
        read_file(path)


def test_writer_enforces_declared_count(tmp_path):
    path = tmp_path / "short.emb"
    writer = EmbeddingWriter(path, dim=2, count=3)
    writer.write(0, 0, np.ones(2, dtype=np.float32))
    with pytest.raises(ArgumentError):
        writer.close()


def test_writer_rejects_wrong_dim_and_duplicate_id(tmp_path):
    path = tmp_path / "w.emb"
    with pytest.raises(ArgumentError):
        with EmbeddingWriter(path, dim=2, count=2) as w:
            w.write(0, 0, np.ones(3, dtype=np.float32))
    with pytest.raises(ArgumentError):
        with EmbeddingWriter(path, dim=2, count=2) as w:
            w.write(1, 0, np.ones(2, dtype=np.float32))
            w.write(1, 0, np.ones(2, dtype=np.float32))


def test_writer_rejects_bad_field_values(tmp_path):
    path = tmp_path / "range.emb"
    cases = [
        (2**63, 0, np.ones(1, dtype=np.float32)),  # id beyond i64
        (0, -1, np.ones(1, dtype=np.float32)),  # negative label
        (0, 0, np.array([np.inf], dtype=np.float32)),  # non-finite payload
        (0, 0, np.zeros(1, dtype=np.float32)),  # zero vector
    ]
    for rec_id, label, vec in cases:
        with pytest.raises(ArgumentError):
            with EmbeddingWriter(path, dim=1, count=1) as w:
                w.write(rec_id, label, vec)
