"""Global metric scale recovery by median consensus over depth ratios.

The decoder emits geometry in normalized units; a metric depth reference per
frame pins the scale. Per-pixel ratios D_ref / Z_pred are pooled over all
frames inside a validity mask and reduced to a single scalar S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from videonav.geometry import DepthMap, PixelMask, PointMap, Waypoint


class ScaleIndeterminateError(ValueError):
    """Not enough valid pixels to estimate a scale."""


@dataclass(frozen=True)
class ScaleConfig:
    """Reliable sensing range plus pooling controls.

    pixel_stride subsamples the pixel lattice to bound memory on large
    frames; the median is statistically stable under it.
    """

    tau_min: float = 0.5
    tau_max: float = 30.0
    min_valid_pixels: int = 100
    pixel_stride: int = 4

    def __post_init__(self):
        if not (0.0 < self.tau_min < self.tau_max):
            raise ValueError("need 0 < tau_min < tau_max")
        if self.min_valid_pixels < 1 or self.pixel_stride < 1:
            raise ValueError("min_valid_pixels and pixel_stride must be >= 1")


@dataclass(frozen=True)
class ScaleEstimate:
    """The recovered scale S in meters per normalized unit, plus diagnostics."""

    S: float
    valid_pixel_count: int
    per_frame_medians: tuple

    def __post_init__(self):
        if not self.S > 0.0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "per_frame_medians", tuple(float(m) for m in self.per_frame_medians))

    def to_record(self) -> dict:
        return {
            "scale": self.S,
            "valid_pixel_count": self.valid_pixel_count,
            "per_frame_medians": list(self.per_frame_medians),
        }

    @classmethod
    def from_record(cls, record: dict) -> "ScaleEstimate":
        return cls(
            S=float(record["scale"]),
            valid_pixel_count=int(record["valid_pixel_count"]),
            per_frame_medians=tuple(record["per_frame_medians"]),
        )


def build_mask(depth_ref: DepthMap, pointmap: PointMap, config: ScaleConfig) -> PixelMask:
    """Pixels with a reference depth inside (tau_min, tau_max) and Z_pred > 0."""
    if (depth_ref.height, depth_ref.width) != (pointmap.height, pointmap.width):
        raise ValueError(
            f"depth/pointmap dimensions differ: {depth_ref.width}x{depth_ref.height}"
            f" vs {pointmap.width}x{pointmap.height}"
        )
    d = depth_ref.depth
    z = pointmap.z
    bits = np.isfinite(d) & (config.tau_min < d) & (d < config.tau_max) & (z > 0.0)
    return PixelMask(bits)


def _lower_median(values: np.ndarray) -> float:
    # Exact order statistic, not an interpolated quantile: for even counts the
    # lower middle element is returned, so the estimate is an observed ratio.
    k = (values.size - 1) // 2
    return float(np.partition(values, k)[k])


def estimate_scale(frames, config: ScaleConfig, reducer: str = "median") -> ScaleEstimate:
    """Pool masked depth ratios over all frames and reduce to one scale.

    frames: iterable of (DepthMap, PointMap) pairs sharing dimensions.
    reducer: "median" (the estimator) or "mean" (diagnostic only; kept to
    show why the consensus choice matters under outliers).
    """
    if reducer not in ("median", "mean"):
        raise ValueError(f"unknown reducer {reducer!r}")
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame")
    stride = config.pixel_stride
    pooled = []
    per_frame = []
    for depth_ref, pointmap in frames:
        mask = build_mask(depth_ref, pointmap, config)
        bits = mask.bits[::stride, ::stride]
        d = depth_ref.depth[::stride, ::stride][bits]
        z = pointmap.z[::stride, ::stride][bits]
        ratios = d / z
        pooled.append(ratios)
        per_frame.append(_lower_median(ratios) if ratios.size else math.nan)
    ratios = np.concatenate(pooled)
    if ratios.size < config.min_valid_pixels:
        raise ScaleIndeterminateError(
            f"{ratios.size} valid pixels pooled, need {config.min_valid_pixels}"
        )
    if reducer == "median":
        s = _lower_median(ratios)
    else:
        s = float(np.mean(ratios))
    return ScaleEstimate(S=s, valid_pixel_count=int(ratios.size), per_frame_medians=tuple(per_frame))


def apply_scale(s: float, waypoints) -> list:
    """Multiply waypoint positions by S; timestamps and yaw pass through."""
    if not s > 0.0:
        raise ValueError("scale must be positive")
    s = float(s)
    return [Waypoint(w.t, s * w.x, s * w.y, s * w.z, w.yaw) for w in waypoints]
