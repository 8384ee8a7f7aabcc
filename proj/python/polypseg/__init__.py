"""Superpixel polyp segmentation: SLIC, texture features, LS-SVM and metrics."""

from ._core import (
    Model,
    SingularSystem,
    extract_features,
    feature_names,
    gradient,
    grayscale,
    grid_spacing,
    hue,
    max_superpixels,
    metrics_from_counts,
    model_from_json,
    oracle_segmentation,
    pixel_metrics,
    segment,
    train,
)

__all__ = [
    "Model",
    "SingularSystem",
    "extract_features",
    "feature_names",
    "gradient",
    "grayscale",
    "grid_spacing",
    "hue",
    "max_superpixels",
    "metrics_from_counts",
    "model_from_json",
    "oracle_segmentation",
    "pixel_metrics",
    "segment",
    "train",
]
