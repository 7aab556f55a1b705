"""Export image-dataset embeddings from a pretrained CNN into the
frozen embedding-file byte format consumed by the unlearning engine."""

from .backbones import (
    Backbone,
    available_backbones,
    register_backbone,
    resolve_backbone,
)
from .datasets import ImageSource, directory_source, resolve_dataset
from .errors import (
    ArgumentError,
    BackboneError,
    DatasetError,
    ExportError,
    FormatError,
)
from .export import ExportJob, ExportSummary, export
from .format import EmbeddingWriter, ExportRecord, read_file, write_file

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "Backbone",
    "BackboneError",
    "DatasetError",
    "EmbeddingWriter",
    "ExportError",
    "ExportJob",
    "ExportRecord",
    "ExportSummary",
    "FormatError",
    "ImageSource",
    "available_backbones",
    "directory_source",
    "export",
    "read_file",
    "register_backbone",
    "resolve_backbone",
    "resolve_dataset",
    "write_file",
]
