"""Labeled image sources.

A dataset is either a known name ("cifar10", "cifar10-test") backed by
torchvision, or a directory of images:

    nested  — one subdirectory per class; the class index is the
              subdirectory's rank in sorted order
    flat    — image files directly in the directory; a single class 0

Iteration order is deterministic (sorted paths / native dataset order),
which fixes the sequential record ids.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

from PIL import Image

from .errors import DatasetError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp")

DEFAULT_DATA_ROOT = os.environ.get(
    "EMBEDDING_EXPORTER_DATA",
    str(Path.home() / ".cache" / "embedding_exporter" / "data"),
)


@dataclass(frozen=True)
class ImageSource:
    """A finite, ordered stream of (PIL image, class index) pairs."""

    name: str
    classes: tuple[str, ...]
    count: int
    _iterate: Callable[[], Iterator[tuple[Image.Image, int]]]

    def __len__(self) -> int:
        return self.count

    def __iter__(self) -> Iterator[tuple[Image.Image, int]]:
        return self._iterate()


def _image_files(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def directory_source(path) -> ImageSource:
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"dataset directory {root} does not exist")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if class_dirs:
        per_class = [(rank, _image_files(d)) for rank, d in enumerate(class_dirs)]
        files = [(f, rank) for rank, fs in per_class for f in fs]
        classes = tuple(d.name for d in class_dirs)
    else:
        files = [(f, 0) for f in _image_files(root)]
        classes = (root.name,)
    if not files:
        raise DatasetError(f"no image files under {root}")

    def iterate() -> Iterator[tuple[Image.Image, int]]:
        for file_path, label in files:
            with Image.open(file_path) as img:
                yield img.convert("RGB"), label

    return ImageSource(str(root), classes, len(files), iterate)


def cifar10_source(train: bool, data_root: str | None, fetch: bool) -> ImageSource:
    try:
        from torchvision.datasets import CIFAR10
    except ImportError as exc:  # pragma: no cover - torchvision is a dependency
        raise DatasetError(f"torchvision unavailable: {exc}") from exc
    root = data_root or DEFAULT_DATA_ROOT
    split = "train" if train else "test"
    try:
        ds = CIFAR10(root=root, train=train, download=fetch)
    except RuntimeError as exc:
        raise DatasetError(
            f"cifar10 {split} split not found under {root} "
            f"(fetch it once with --fetch, then rerun offline): {exc}"
        ) from exc
    except OSError as exc:
        raise DatasetError(f"cannot fetch cifar10 into {root}: {exc}") from exc

    def iterate() -> Iterator[tuple[Image.Image, int]]:
        for img, label in ds:
            yield img.convert("RGB"), int(label)

    return ImageSource(f"cifar10-{split}", tuple(ds.classes), len(ds), iterate)


def resolve_dataset(spec: str, *, data_root: str | None = None,
                    fetch: bool = False) -> ImageSource:
    """A named dataset, or a directory path if ``spec`` is not a name."""
    if spec == "cifar10":
        return cifar10_source(True, data_root, fetch)
    if spec == "cifar10-test":
        return cifar10_source(False, data_root, fetch)
    return directory_source(spec)
