"""Offline feature exporter: image folders -> OTS1 embedding files."""

from .export import ExportError, ExportJob, export
from .hub import Backbone, UnknownBackboneError, resolve_backbone
from .writer import EmbeddingWriter

__version__ = "0.1.0"

__all__ = [
    "Backbone",
    "EmbeddingWriter",
    "ExportError",
    "ExportJob",
    "UnknownBackboneError",
    "export",
    "resolve_backbone",
]
