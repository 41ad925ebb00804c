"""Detector exporter: pretrained 2D detection to per-frame JSON documents."""

from .backends import CASCADE_MODEL_ID, ModelLoadError, load_backend
from .export import (
    ExportConfig,
    ExportItem,
    detector_dims,
    export_detections,
    write_documents,
)

__version__ = "0.1.0"
