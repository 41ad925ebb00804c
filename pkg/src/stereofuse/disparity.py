"""Dense block-matching disparity from a rectified stereo pair.

Disparity maps are int32 arrays the size of the input pair.  Value 0 doubles
as "invalid / no data": border centers that cannot fit a block, and centers
whose best match is at zero offset, both store 0.  Downstream fusion only
consumes non-zero entries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class DisparityParams:
    """Matcher configuration.

    ``block_step`` controls output granularity: 1 evaluates every pixel and
    writes per-pixel winners; larger steps evaluate a center grid and stamp
    each winner over the whole block (the cheap block-granularity mode).
    None means "use the block width", which tiles the image exactly.
    """

    block_w: int = 5
    block_h: int = 5
    max_disparity: int = 64
    block_step: int | None = None
    tie_break: str = "smallest-d"

    def validate(self) -> None:
        for name, dim in (("block_w", self.block_w), ("block_h", self.block_h)):
            if dim < 1 or dim % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 1, got {dim}")
        if self.max_disparity < 1:
            raise ValueError(f"max_disparity must be >= 1, got {self.max_disparity}")
        if self.step < 1:
            raise ValueError(f"block_step must be >= 1, got {self.block_step}")
        if self.tie_break != "smallest-d":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")

    @property
    def step(self) -> int:
        return self.block_w if self.block_step is None else self.block_step


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an 8-bit RGB raster to luma (ITU-R BT.601 weights)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected 3-channel raster, got shape {rgb.shape}")
    if rgb.dtype != np.uint8:
        raise ValueError(f"expected 8-bit input, got dtype {rgb.dtype}")
    wr, wg, wb = LUMA_WEIGHTS
    luma = wr * rgb[:, :, 0] + wg * rgb[:, :, 1] + wb * rgb[:, :, 2]
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def _check_pair(left: np.ndarray, right: np.ndarray, params: DisparityParams) -> None:
    if left.ndim != 2 or right.ndim != 2:
        raise ValueError("disparity inputs must be single-channel images")
    if left.shape != right.shape:
        raise ValueError(f"dimension mismatch: left {left.shape} vs right {right.shape}")
    params.validate()
    if params.max_disparity >= left.shape[1]:
        raise ValueError(
            f"max_disparity {params.max_disparity} must be < image width {left.shape[1]}"
        )


def sad_cost(
    left: np.ndarray,
    right: np.ndarray,
    u: int,
    v: int,
    d: int,
    params: DisparityParams,
) -> int:
    """Sum of absolute differences over one block at disparity d."""
    params.validate()
    height, width = left.shape
    rw = params.block_w // 2
    rh = params.block_h // 2
    if not (rw <= u <= width - 1 - rw and rh <= v <= height - 1 - rh and u - d >= rw):
        raise ValueError(f"block out of bounds at (u={u}, v={v}, d={d})")
    lb = left[v - rh : v + rh + 1, u - rw : u + rw + 1].astype(np.int32)
    rb = right[v - rh : v + rh + 1, u - d - rw : u - d + rw + 1].astype(np.int32)
    return int(np.abs(lb - rb).sum())


def compute_disparity_map(
    left: np.ndarray,
    right: np.ndarray,
    params: DisparityParams = DisparityParams(),
    backend: str | None = None,
) -> np.ndarray:
    """Winner-takes-all SAD block matching over a rectified pair.

    For each evaluated center the disparity d in [0, max_disparity] with the
    lowest SAD wins, restricted to offsets whose right block stays inside the
    image; ties resolve to the smallest d.  ``backend`` overrides the kernel
    selection ("numba"/"numpy"); default follows numba availability and the
    STEREOFUSE_NUMBA environment flag.
    """
    _check_pair(left, right, params)
    return _kernels.block_match(
        left, right, params.block_w, params.block_h, params.max_disparity,
        params.step, backend,
    )


def disparity_naive_oracle(
    left: np.ndarray,
    right: np.ndarray,
    params: DisparityParams = DisparityParams(),
) -> np.ndarray:
    """Reference matcher: per-pixel nested loops, no shortcuts.

    Same contract as :func:`compute_disparity_map` with block_step=1.  Kept
    deliberately plain and independent of the kernels module; only used to
    cross-check the optimized paths in tests.
    """
    _check_pair(left, right, params)
    height, width = left.shape
    rw = params.block_w // 2
    rh = params.block_h // 2
    lhs = left.astype(np.int32)
    rhs = right.astype(np.int32)
    out = np.zeros((height, width), dtype=np.int32)
    for v in range(rh, height - rh):
        for u in range(rw, width - rw):
            best_cost = None
            best_d = 0
            for d in range(min(params.max_disparity, u - rw) + 1):
                lb = lhs[v - rh : v + rh + 1, u - rw : u + rw + 1]
                rb = rhs[v - rh : v + rh + 1, u - d - rw : u - d + rw + 1]
                cost = int(np.abs(lb - rb).sum())
                if best_cost is None or cost < best_cost:
                    best_cost = cost
                    best_d = d
            out[v, u] = best_d
    return out
