"""Local Dynamic Map: bird's-eye rendering of object positions.

The ground plane (ego X right, Z forward, in meters) maps onto the base
raster through an affine homography constructed from the view ranges, so the
stated side/front ranges land exactly on the margin anchor pixels:

    u = base_w/2 + X * (base_w/2 - offset) / side_range
    v = (base_h - offset) - Z * (base_h - 2*offset) / front_range

Fixed markers: blue filled circle at the car front (bottom center), green
circles at the upper corners (side range), yellow circle at the top middle
(front range).  In-view objects draw as red filled circles with a
"<label> <distance> m" caption.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._font import GLYPH_H, GLYPH_W, glyph_for
from .reproject import WorldPoint

BLUE = (0, 0, 255)
GREEN = (0, 255, 0)
YELLOW = (255, 255, 0)
RED = (255, 0, 0)
WHITE = (255, 255, 255)

DEFAULT_SIDE_RANGE_M = 2.5
DEFAULT_FRONT_RANGE_M = 6.0


@dataclass
class LdmParams:
    base_w: int = 500
    base_h: int = 600
    offset: int = 20
    side_range: float = DEFAULT_SIDE_RANGE_M
    front_range: float = DEFAULT_FRONT_RANGE_M
    circle_radius: int = 8
    H: np.ndarray | None = None

    def validate(self) -> None:
        if self.base_w < 2 or self.base_h < 2:
            raise ValueError(f"degenerate base image {self.base_w}x{self.base_h}")
        if not (0 < self.offset < min(self.base_w // 2, self.base_h // 2)):
            raise ValueError(f"offset {self.offset} does not fit the base image")
        if self.side_range <= 0.0 or self.front_range <= 0.0:
            raise ValueError(
                f"view ranges must be positive (side={self.side_range}, "
                f"front={self.front_range})"
            )
        if self.H is not None and abs(np.linalg.det(self.H)) < 1e-12:
            raise ValueError("supplied homography is singular")

    def resolved_homography(self) -> np.ndarray:
        return self.H if self.H is not None else build_ldm_homography(self)


@dataclass(frozen=True)
class LdmObject:
    label: str
    world: WorldPoint
    distance_euclid: float
    distance_z: float
    in_view: bool


def build_ldm_homography(params: LdmParams) -> np.ndarray:
    """World ground plane (X, Z, 1) -> base-image pixel (u, v, 1)."""
    params.validate()
    sx = (params.base_w / 2.0 - params.offset) / params.side_range
    sz = (params.base_h - 2.0 * params.offset) / params.front_range
    return np.array(
        [
            [sx, 0.0, params.base_w / 2.0],
            [0.0, -sz, float(params.base_h - params.offset)],
            [0.0, 0.0, 1.0],
        ]
    )


def apply_homography(H: np.ndarray, X: float, Z: float) -> tuple[float, float]:
    """Map a ground-plane point through H (homogeneous multiply + divide)."""
    p = H @ np.array([X, Z, 1.0])
    if p[2] == 0.0:
        raise ValueError(f"point ({X}, {Z}) maps to infinity (w = 0)")
    return float(p[0] / p[2]), float(p[1] / p[2])


def make_ldm_object(
    label: str,
    world: WorldPoint,
    distance_euclid: float,
    distance_z: float,
    params: LdmParams,
) -> LdmObject:
    u, v = apply_homography(params.resolved_homography(), world.X, world.Z)
    in_view = 0.0 <= u < params.base_w and 0.0 <= v < params.base_h
    return LdmObject(
        label=label,
        world=world,
        distance_euclid=distance_euclid,
        distance_z=distance_z,
        in_view=in_view,
    )


def _draw_disk(img: np.ndarray, cx: float, cy: float, radius: int, color) -> None:
    h, w = img.shape[:2]
    x = int(round(cx))
    y = int(round(cy))
    y0, y1 = max(y - radius, 0), min(y + radius + 1, h)
    x0, x1 = max(x - radius, 0), min(x + radius + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    mask = (xx - x) ** 2 + (yy - y) ** 2 <= radius * radius
    img[y0:y1, x0:x1][mask] = color


def _draw_ring(img: np.ndarray, cx: float, cy: float, radius: int, color) -> None:
    h, w = img.shape[:2]
    x = int(round(cx))
    y = int(round(cy))
    y0, y1 = max(y - radius, 0), min(y + radius + 1, h)
    x0, x1 = max(x - radius, 0), min(x + radius + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    r2 = (xx - x) ** 2 + (yy - y) ** 2
    mask = (r2 <= radius * radius) & (r2 >= (radius - 2) * (radius - 2))
    img[y0:y1, x0:x1][mask] = color


def _draw_text(img: np.ndarray, x: int, y: int, text: str, color) -> None:
    h, w = img.shape[:2]
    for idx, char in enumerate(text):
        gx = x + idx * (GLYPH_W + 1)
        rows = glyph_for(char)
        for gy, row in enumerate(rows):
            py = y + gy
            if not 0 <= py < h:
                continue
            for gxx, bit in enumerate(row):
                px = gx + gxx
                if bit == "#" and 0 <= px < w:
                    img[py, px] = color


def render_ldm_frame(objects: list[LdmObject], params: LdmParams) -> np.ndarray:
    """Render one LDM frame: fixed range markers plus in-view objects."""
    params.validate()
    H = params.resolved_homography()
    img = np.zeros((params.base_h, params.base_w, 3), dtype=np.uint8)
    r = params.circle_radius

    car_u, car_v = apply_homography(H, 0.0, 0.0)
    _draw_disk(img, car_u, car_v, r, BLUE)
    _draw_ring(img, params.offset, params.offset, r, GREEN)
    _draw_ring(img, params.base_w - params.offset, params.offset, r, GREEN)
    _draw_ring(img, params.base_w / 2.0, params.offset, r, YELLOW)

    for obj in objects:
        if not obj.in_view:
            continue
        u, v = apply_homography(H, obj.world.X, obj.world.Z)
        _draw_disk(img, u, v, r, RED)
        caption = f"{obj.label} {obj.distance_euclid:.2f} m"
        _draw_text(img, int(round(u)) + r + 3, int(round(v)) - GLYPH_H // 2, caption, WHITE)
    return img
