"""Offline video-to-landmark-CSV extraction with pluggable pose backends."""

from .backends import BackendUnavailable, MediaPipeBackend, SidecarBackend, make_backend
from .extract import ExtractionJob, ExtractionSummary, UnreadableVideo, extract

__version__ = "0.1.0"

__all__ = [
    "BackendUnavailable",
    "ExtractionJob",
    "ExtractionSummary",
    "MediaPipeBackend",
    "SidecarBackend",
    "UnreadableVideo",
    "extract",
    "make_backend",
    "__version__",
]
