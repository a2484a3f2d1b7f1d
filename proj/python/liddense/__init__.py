"""Sparse-to-dense depth completion toolkit."""

from ._core import (
    CameraIntrinsics,
    EvaluationError,
    FormatError,
    RangeError,
    ShapeError,
    convert_frame,
    evaluate,
    evaluate_oracle,
    fuse,
    load_calibration,
    load_depth_png,
    save_depth_png,
    scan_lines,
    synthetic_scene,
    train_toy,
)

__version__ = "0.1.0"
