"""Metric scale recovery: align normalized decoder geometry with metric depth."""

from videonav.scale.pfm import read_pfm, write_pfm, load_depth, save_depth, load_pointmap, save_pointmap
from videonav.scale.recovery import (
    ScaleConfig,
    ScaleEstimate,
    ScaleIndeterminateError,
    apply_scale,
    build_mask,
    estimate_scale,
)

__all__ = [
    "ScaleConfig",
    "ScaleEstimate",
    "ScaleIndeterminateError",
    "apply_scale",
    "build_mask",
    "estimate_scale",
    "read_pfm",
    "write_pfm",
    "load_depth",
    "save_depth",
    "load_pointmap",
    "save_pointmap",
]
