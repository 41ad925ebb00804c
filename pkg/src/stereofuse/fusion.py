"""Fuse bounding boxes with the disparity map.

Only non-zero disparities inside a box count as data; their arithmetic mean
becomes the box's disparity estimate and their coordinate centroid the
representative pixel handed to reprojection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detections import Detection

DEFAULT_MIN_VALID = 25


@dataclass(frozen=True)
class BoxDisparityStats:
    """Valid-disparity statistics inside one (clamped) box.

    With count == 0 the remaining fields are None.
    """

    count: int
    mean_d: float | None
    min_d: int | None
    max_d: int | None
    centroid: tuple[float, float] | None
    box: tuple[float, float, float, float]


@dataclass(frozen=True)
class FusedEstimate:
    mean_disparity: float
    pixel: tuple[float, float]
    stats: BoxDisparityStats


def collect_box_stats(
    dmap: np.ndarray, box: tuple[float, float, float, float]
) -> BoxDisparityStats:
    """Gather non-zero disparity statistics over a half-open pixel box.

    The box is clamped to the image; a pixel (u, v) belongs to the box when
    x_min <= u < x_max and y_min <= v < y_max.
    """
    height, width = dmap.shape
    x_min, y_min, x_max, y_max = box
    x_lo = max(x_min, 0.0)
    y_lo = max(y_min, 0.0)
    x_hi = min(x_max, float(width))
    y_hi = min(y_max, float(height))
    if x_lo >= x_hi or y_lo >= y_hi:
        raise ValueError(f"box {box} entirely outside image {width}x{height}")

    u0 = int(math.ceil(x_lo))
    v0 = int(math.ceil(y_lo))
    u1 = int(math.ceil(x_hi))
    v1 = int(math.ceil(y_hi))
    region = dmap[v0:v1, u0:u1]
    vs, us = np.nonzero(region > 0)
    count = int(vs.size)
    if count == 0:
        return BoxDisparityStats(
            count=0, mean_d=None, min_d=None, max_d=None, centroid=None, box=box
        )
    values = region[vs, us]
    # centroid averaged over absolute coordinates so the result is invariant
    # to how the box was clamped or grown around the same valid pixels
    return BoxDisparityStats(
        count=count,
        mean_d=float(values.mean(dtype=np.float64)),
        min_d=int(values.min()),
        max_d=int(values.max()),
        centroid=(
            float((us + u0).mean(dtype=np.float64)),
            float((vs + v0).mean(dtype=np.float64)),
        ),
        box=box,
    )


def fuse_stats(stats: BoxDisparityStats, min_valid: int) -> FusedEstimate | None:
    if stats.count < min_valid:
        return None
    return FusedEstimate(mean_disparity=stats.mean_d, pixel=stats.centroid, stats=stats)


def fuse_detection(
    dmap: np.ndarray, det: Detection, min_valid: int = DEFAULT_MIN_VALID
) -> FusedEstimate | None:
    """Fuse one detection with the disparity map.

    Returns None (no estimate) when fewer than ``min_valid`` pixels inside
    the box carry data; that is a soft outcome, not an error.
    """
    return fuse_stats(collect_box_stats(dmap, det.box), min_valid)
