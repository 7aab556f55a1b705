"""The export pipeline: dataset -> backbone -> embedding file."""

from __future__ import annotations

from dataclasses import dataclass

from .backbones import resolve_backbone
from .datasets import resolve_dataset
from .errors import ArgumentError
from .format import EmbeddingWriter

DEFAULT_BACKBONE = "resnet50"
DEFAULT_BATCH_SIZE = 64


@dataclass(frozen=True)
class ExportJob:
    """One export: which images, which feature map, where to write.

    ``dataset`` is a known name ("cifar10", "cifar10-test") or a
    directory of images. ``fetch`` permits the one-time download of a
    named dataset; everything else runs offline.
    """

    dataset: str
    out: str
    backbone: str = DEFAULT_BACKBONE
    batch_size: int = DEFAULT_BATCH_SIZE
    data_root: str | None = None
    fetch: bool = False

    def __post_init__(self):
        if not self.dataset:
            raise ArgumentError("dataset must be a name or directory")
        if not self.out:
            raise ArgumentError("output path must be non-empty")
        if self.batch_size < 1:
            raise ArgumentError(f"batch size must be positive, got {self.batch_size}")


@dataclass(frozen=True)
class ExportSummary:
    out: str
    n_records: int
    n_classes: int
    dim: int
    backbone: str
    classes: tuple[str, ...]


def export(job: ExportJob) -> ExportSummary:
    """Embed every image and write one record per image.

    Records carry sequential ids in dataset order and the dataset's
    class index as the label. The written dim always equals the
    backbone's feature width — a mismatch is a bug, not an input error,
    hence the hard assert.
    """
    source = resolve_dataset(job.dataset, data_root=job.data_root, fetch=job.fetch)
    backbone = resolve_backbone(job.backbone)
    seen_labels: set[int] = set()
    next_id = 0
    with EmbeddingWriter(job.out, backbone.dim, len(source)) as writer:
        batch_inputs: list = []
        batch_labels: list[int] = []

        def flush() -> None:
            nonlocal next_id
            if not batch_inputs:
                return
            matrix = backbone.embed_batch(batch_inputs)
            assert matrix.shape == (len(batch_inputs), backbone.dim), (
                f"backbone {backbone.name!r} produced shape {matrix.shape}, "
                f"declared dim {backbone.dim}"
            )
            for row, label in zip(matrix, batch_labels):
                writer.write(next_id, label, row)
                next_id += 1
            batch_inputs.clear()
            batch_labels.clear()

        for image, label in source:
            batch_inputs.append(backbone.preprocess(image))
            batch_labels.append(label)
            seen_labels.add(label)
            if len(batch_inputs) >= job.batch_size:
                flush()
        flush()
    return ExportSummary(
        out=job.out,
        n_records=next_id,
        n_classes=len(seen_labels),
        dim=backbone.dim,
        backbone=backbone.name,
        classes=source.classes,
    )
