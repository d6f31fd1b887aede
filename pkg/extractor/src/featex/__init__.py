"""Image feature extraction producing divsum-compatible embedding files."""

from .extract import (
    FEATEX_SEED,
    Backbone,
    ExtractionError,
    extract,
    fit_pca,
    list_images,
    load_backbone,
    raw_features,
)

__all__ = [
    "FEATEX_SEED",
    "Backbone",
    "ExtractionError",
    "extract",
    "fit_pca",
    "list_images",
    "load_backbone",
    "raw_features",
]

__version__ = "0.1.0"
