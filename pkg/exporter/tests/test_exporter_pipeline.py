"""Dataset handling, export pipeline, determinism, and the CLI."""

from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

import unlearndb
from embedding_exporter import (
    ArgumentError,
    BackboneError,
    DatasetError,
    ExportJob,
    available_backbones,
    directory_source,
    export,
    read_file,
    resolve_backbone,
)

from conftest import STUB_BACKBONE, STUB_DIM


# ---------------------------------------------------------------- datasets


def test_nested_directory_labels_by_sorted_rank(image_tree):
    source = directory_source(image_tree)
    assert source.classes == ("cat", "dog")
    assert len(source) == 6
    labels = [label for _, label in source]
    assert labels == [0, 0, 0, 1, 1, 1]


def test_flat_directory_is_single_class(flat_dir):
    source = directory_source(flat_dir)
    assert len(source) == 1
    assert source.classes == (flat_dir.name,)
    (image, label), = list(source)
    assert label == 0
    assert image.mode == "RGB"


def test_missing_and_empty_directories_rejected(tmp_path):
    with pytest.raises(DatasetError):
        directory_source(tmp_path / "nowhere")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(DatasetError):
        directory_source(empty)
    (empty / "notes.txt").write_text("not an image")
    with pytest.raises(DatasetError):
        directory_source(empty)


def test_named_dataset_unavailable_offline_names_the_fix(tmp_path):
    # Without --fetch and with an empty cache, a named dataset must fail
    # with actionable guidance rather than attempting the network.
    from embedding_exporter import resolve_dataset

    with pytest.raises(DatasetError) as exc_info:
        resolve_dataset("cifar10", data_root=str(tmp_path), fetch=False)
    assert "--fetch" in str(exc_info.value)


# ---------------------------------------------------------------- pipeline


def test_stub_export_end_to_end(image_tree, tmp_path):
    out = tmp_path / "tree.emb"
    summary = export(
        ExportJob(str(image_tree), str(out), backbone=STUB_BACKBONE, batch_size=4)
    )
    assert summary.n_records == 6
    assert summary.n_classes == 2
    assert summary.dim == STUB_DIM
    assert summary.classes == ("cat", "dog")

    records = read_file(out)
    assert [r.id for r in records] == list(range(6))
    assert [r.label for r in records] == [0, 0, 0, 1, 1, 1]
    assert all(r.vector.shape == (STUB_DIM,) for r in records)

    # The consuming engine must accept the same bytes without complaint.
    loaded = unlearndb.read_embeddings(out)
    assert [r.id for r in loaded] == list(range(6))
    assert [r.label for r in loaded] == [0, 0, 0, 1, 1, 1]


def test_reexport_bit_identical_across_batch_sizes(image_tree, tmp_path):
    blobs = []
    for batch_size in (1, 4, 64):
        out = tmp_path / f"b{batch_size}.emb"
        export(
            ExportJob(
                str(image_tree), str(out), backbone=STUB_BACKBONE,
                batch_size=batch_size,
            )
        )
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_export_job_validation():
    with pytest.raises(ArgumentError):
        ExportJob("", "out.emb")
    with pytest.raises(ArgumentError):
        ExportJob("dir", "")
    with pytest.raises(ArgumentError):
        ExportJob("dir", "out.emb", batch_size=0)


def test_unknown_backbone_lists_known_ones():
    with pytest.raises(BackboneError) as exc_info:
        resolve_backbone("not-a-backbone")
    assert "resnet50" in str(exc_info.value)


def test_registry_holds_builtin_backbones():
    names = available_backbones()
    for expected in ("resnet50", "resnet18", "resnet50-untrained",
                     "resnet18-untrained"):
        assert expected in names


# ------------------------------------------------------- real torch backbone


def test_untrained_resnet_export_is_deterministic(image_tree, tmp_path):
    """The torch path: seeded untrained weights need no network, so the
    full image->tensor->feature->file chain runs and must be reproducible
    regardless of batching."""
    out_a = tmp_path / "a.emb"
    out_b = tmp_path / "b.emb"
    summary = export(
        ExportJob(str(image_tree), str(out_a), backbone="resnet18-untrained",
                  batch_size=4)
    )
    assert summary.dim == 512
    assert summary.n_records == 6
    export(
        ExportJob(str(image_tree), str(out_b), backbone="resnet18-untrained",
                  batch_size=3)
    )
    assert out_a.read_bytes() == out_b.read_bytes()

    loaded = unlearndb.read_embeddings(out_a)
    assert len(loaded) == 6
    assert all(r.vector.shape == (512,) for r in loaded)
    matrix = np.stack([r.vector for r in loaded])
    # Distinct images should give distinct features.
    assert len({row.tobytes() for row in matrix.astype(np.float32)}) == 6


# --------------------------------------------------------------------- CLI


def _run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "embedding_exporter", *args],
        capture_output=True, text=True, timeout=300,
    )


def test_cli_export_happy_path(image_tree, tmp_path):
    out = tmp_path / "cli.emb"
    proc = _run_cli(
        "--dataset", str(image_tree), "--out", str(out),
        "--backbone", "resnet18-untrained", "--batch-size", "5",
    )
    assert proc.returncode == 0, proc.stderr
    assert f"wrote 6 records to {out}" in proc.stdout
    assert "backbone=resnet18-untrained dim=512 classes=2" in proc.stdout
    assert [r.label for r in read_file(out)] == [0, 0, 0, 1, 1, 1]


def test_cli_dataset_error(tmp_path):
    proc = _run_cli(
        "--dataset", str(tmp_path / "missing"), "--out", str(tmp_path / "x.emb")
    )
    assert proc.returncode == 1
    assert proc.stderr.startswith("error: dataset:")


def test_cli_backbone_error(image_tree, tmp_path):
    proc = _run_cli(
        "--dataset", str(image_tree), "--out", str(tmp_path / "x.emb"),
        "--backbone", "nope",
    )
    assert proc.returncode == 1
    assert proc.stderr.startswith("error: backbone:")


def test_cli_missing_required_arguments():
    proc = _run_cli("--dataset", "somewhere")
    assert proc.returncode == 2
