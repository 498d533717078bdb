"""Tangent-convolution point cloud segmentation."""

from ._core import (
    UNLABELED,
    evaluate,
    generate_scene,
    precompute,
    read_ply,
    receptive_field,
    segment,
    train,
    write_ply,
)

__all__ = [
    "UNLABELED",
    "evaluate",
    "generate_scene",
    "precompute",
    "read_ply",
    "receptive_field",
    "segment",
    "train",
    "write_ply",
]
