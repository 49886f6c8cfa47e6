"""adextract: block-level deep-feature extraction to ADFV interchange files."""

from .backbones import BACKBONES, Backbone
from .dataset import AUGMENT_MODES, ImageRecord, scan_images
from .errors import ExtractError
from .extract import ExtractionConfig, run_extraction
from .formats import write_labels, write_manifest, write_matrix

__version__ = "0.1.0"

__all__ = [
    "AUGMENT_MODES",
    "BACKBONES",
    "Backbone",
    "ExtractError",
    "ExtractionConfig",
    "ImageRecord",
    "run_extraction",
    "scan_images",
    "write_labels",
    "write_manifest",
    "write_matrix",
    "__version__",
]
