"""Pixel + disparity to ego-frame 3D coordinates.

Ego frame: origin at the left camera center, X right, Y down, Z forward
along the optical axis.  Valid only for rectified rigs, where triangulation
reduces to Z = f*B/d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .calib import StereoRig


@dataclass(frozen=True)
class WorldPoint:
    X: float
    Y: float
    Z: float


def disparity_to_depth(d: float, f: float, B: float) -> float:
    """Depth along the optical axis from one disparity: Z = f*B/d."""
    if d <= 0.0:
        raise ValueError(f"invalid disparity {d} (must be > 0)")
    if f <= 0.0 or B <= 0.0:
        raise ValueError(f"focal length and baseline must be positive (f={f}, B={B})")
    return f * B / d


def pixel_to_world(u: float, v: float, d: float, rig: StereoRig) -> WorldPoint:
    """Back-project a rectified-left pixel with disparity d into the ego frame."""
    if not rig.rectified_input:
        raise ValueError("pixel_to_world requires a rectified rig")
    f = rig.focal_px
    cx, cy = rig.principal_point
    Z = disparity_to_depth(d, f, rig.baseline)
    return WorldPoint(X=(u - cx) * Z / f, Y=(v - cy) * Z / f, Z=Z)


def ground_distance(p: WorldPoint) -> float:
    """Planar distance in the ground (X-Z) plane from the camera origin."""
    return math.hypot(p.X, p.Z)
