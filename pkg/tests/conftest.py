import numpy as np
import pytest

from stereofuse.calib import CameraIntrinsics, StereoRig, make_rectified_rig


@pytest.fixture
def intr():
    return CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0)


@pytest.fixture
def rectified_rig():
    return make_rectified_rig(f=500.0, cx=320.0, cy=240.0, baseline=0.1)


@pytest.fixture
def fronto_rig(intr):
    return StereoRig(left=intr, right=intr, R=np.eye(3), T=np.array([-0.1, 0.0, 0.0]))


def project_pinhole(P, intr, R=None, t=None):
    """Independent pinhole projection used as a geometric oracle in tests."""
    x = np.asarray(P, dtype=np.float64)
    if R is not None:
        x = R @ x
    if t is not None:
        x = x + t
    return np.array([intr.fx * x[0] / x[2] + intr.cx, intr.fy * x[1] / x[2] + intr.cy])


def apply_h(H, p):
    q = H @ np.array([p[0], p[1], 1.0])
    return q[:2] / q[2]


def shifted_pair(width, height, k, seed):
    """Textured image and its k-shifted copy with exact correspondence.

    A texture k columns wider than the frame is cropped twice, so
    right[v, u] == left[v, u + k] with every pixel of both views textured.
    """
    rng = np.random.default_rng(seed)
    tex = rng.integers(0, 256, size=(height, width + k), dtype=np.uint8)
    return tex[:, :width].copy(), tex[:, k : width + k].copy()
