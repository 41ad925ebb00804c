"""Block-matching inner loops: numba-jitted kernels with a numpy fallback.

The jitted path is the default whenever numba imports successfully; setting
the environment variable ``STEREOFUSE_NUMBA`` to ``0``/``false``/``off``/``no``
forces the pure-numpy path.  Both implementations are bit-identical by
contract (covered by tests): integer SAD costs, candidate disparities scanned
in ascending order, strict-less winner update (ties resolve to the smallest
disparity), and row-major block writes.
"""
from __future__ import annotations

import os

import numpy as np

_FALSY = {"0", "false", "off", "no"}


def numba_requested() -> bool:
    return os.environ.get("STEREOFUSE_NUMBA", "1").strip().lower() not in _FALSY


HAVE_NUMBA = False
if numba_requested():
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False


def _block_match_loops(left, right, block_w, block_h, max_disparity, step, out):
    # Centers anchored at (rw, rh) and advanced by `step` on both axes; a
    # center is evaluated only if its own block fits, and a disparity d only
    # if the matching right block fits.  step == 1 writes the winner at the
    # center pixel; step > 1 stamps it over the whole block footprint.
    height, width = left.shape
    rw = block_w // 2
    rh = block_h // 2
    vc = rh
    while vc <= height - 1 - rh:
        uc = rw
        while uc <= width - 1 - rw:
            d_hi = uc - rw
            if d_hi > max_disparity:
                d_hi = max_disparity
            best_cost = np.int64(1) << 62
            best_d = 0
            for d in range(d_hi + 1):
                cost = np.int64(0)
                for y in range(vc - rh, vc + rh + 1):
                    # cost only grows, so reaching best_cost means d cannot win
                    if cost >= best_cost:
                        break
                    for x in range(uc - rw, uc + rw + 1):
                        diff = np.int64(left[y, x]) - np.int64(right[y, x - d])
                        if diff < 0:
                            diff = -diff
                        cost += diff
                if cost < best_cost:
                    best_cost = cost
                    best_d = d
            if step == 1:
                out[vc, uc] = best_d
            else:
                out[vc - rh : vc + rh + 1, uc - rw : uc + rw + 1] = best_d
            uc += step
        vc += step


if HAVE_NUMBA:
    _block_match_numba = njit(cache=True, nogil=True)(_block_match_loops)


def _integral(values: np.ndarray) -> np.ndarray:
    h, w = values.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    ii[1:, 1:] = values.cumsum(axis=0, dtype=np.int64).cumsum(axis=1)
    return ii


def _block_match_numpy(left, right, block_w, block_h, max_disparity, step, out):
    height, width = left.shape
    rw = block_w // 2
    rh = block_h // 2
    vc = np.arange(rh, height - rh, step)
    uc = np.arange(rw, width - rw, step)
    if vc.size == 0 or uc.size == 0:
        return
    lhs = left.astype(np.int16)
    rhs = right.astype(np.int16)

    best_cost = np.full((vc.size, uc.size), np.int64(1) << 62, dtype=np.int64)
    best_d = np.zeros((vc.size, uc.size), dtype=np.int32)
    y_lo = vc - rh
    y_hi = vc + rh + 1
    for d in range(max_disparity + 1):
        usable = uc - rw >= d
        if not usable.any():
            break
        # absolute differences at offset d, indexed by right-image column
        ad = np.abs(lhs[:, d:] - rhs[:, : width - d])
        ii = _integral(ad)
        cols = uc[usable] - rw - d
        sums = (
            ii[np.ix_(y_hi, cols + block_w)]
            - ii[np.ix_(y_lo, cols + block_w)]
            - ii[np.ix_(y_hi, cols)]
            + ii[np.ix_(y_lo, cols)]
        )
        sub_cost = best_cost[:, usable]
        sub_d = best_d[:, usable]
        improved = sums < sub_cost
        sub_cost[improved] = sums[improved]
        sub_d[improved] = d
        best_cost[:, usable] = sub_cost
        best_d[:, usable] = sub_d

    if step == 1:
        out[rh : height - rh, rw : width - rw] = best_d
    elif step == block_w and step == block_h:
        # non-overlapping tiling: blocks cover [i*step, i*step + block) exactly
        tiled = np.repeat(np.repeat(best_d, block_h, axis=0), block_w, axis=1)
        out[: vc.size * block_h, : uc.size * block_w] = tiled
    else:
        for j in range(vc.size):
            for i in range(uc.size):
                out[vc[j] - rh : vc[j] + rh + 1, uc[i] - rw : uc[i] + rw + 1] = best_d[j, i]


def default_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def block_match(
    left: np.ndarray,
    right: np.ndarray,
    block_w: int,
    block_h: int,
    max_disparity: int,
    step: int,
    backend: str | None = None,
) -> np.ndarray:
    """Dispatch the SAD block-matching kernel; returns an int32 map."""
    backend = backend or default_backend()
    out = np.zeros(left.shape, dtype=np.int32)
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(
                "numba backend unavailable (not importable or disabled via STEREOFUSE_NUMBA)"
            )
        _block_match_numba(
            np.ascontiguousarray(left),
            np.ascontiguousarray(right),
            block_w,
            block_h,
            max_disparity,
            step,
            out,
        )
    elif backend == "numpy":
        _block_match_numpy(left, right, block_w, block_h, max_disparity, step, out)
    else:
        raise ValueError(f"unknown backend {backend!r} (expected 'numba' or 'numpy')")
    return out
