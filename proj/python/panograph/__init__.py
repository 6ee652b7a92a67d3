"""Graph-based panoptic segmentation of LiDAR point clouds."""

from ._core import (
    ConfigError,
    DataError,
    Error,
    FormatError,
    InputError,
    IoError,
    ShapeError,
    TrainingError,
    associate_clusters,
    connected_components,
    eval,
    evaluate,
    infer,
    oversegment,
    read_frame,
    synth,
    synthetic_class_table,
    synthetic_scene,
    train,
    write_frame,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "FormatError",
    "InputError",
    "IoError",
    "ShapeError",
    "TrainingError",
    "associate_clusters",
    "connected_components",
    "eval",
    "evaluate",
    "infer",
    "oversegment",
    "read_frame",
    "synth",
    "synthetic_class_table",
    "synthetic_scene",
    "train",
    "write_frame",
]
