"""Stereo rig calibration: parsing, rectification geometry, image remapping.

Conventions: pixel origin at the top-left corner, +u right, +v down.  The
rig transform maps left-camera coordinates into the right camera frame,
``x_r = R @ x_l + T``, with T in meters.  A fronto-parallel rig with the
right camera a baseline B to the right of the left camera therefore has
``T = [-B, 0, 0]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

ORTHONORMALITY_TOL = 1e-9
MIN_BASELINE_M = 1e-9

# Flag value used in rectification maps for destination pixels whose source
# coordinate falls outside the original image.
OUT_OF_BOUNDS = -1.0


class CalibrationError(ValueError):
    """A calibration document or rig violates an invariant."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with Brown-Conrady distortion (k1, k2, p1, p2, k3)."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0

    def validate(self, path: str = "camera") -> None:
        if not (self.fx > 0.0):
            raise CalibrationError(f"{path}.fx: non-positive focal length ({self.fx})")
        if not (self.fy > 0.0):
            raise CalibrationError(f"{path}.fy: non-positive focal length ({self.fy})")
        for name in ("cx", "cy", "k1", "k2", "p1", "p2", "k3"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise CalibrationError(f"{path}.{name}: non-finite value ({value})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def distortion(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.p1, self.p2, self.k3])

    @property
    def has_distortion(self) -> bool:
        return bool(np.any(self.distortion != 0.0))


@dataclass
class StereoRig:
    """Calibrated stereo pair plus optional precomputed rectification."""

    left: CameraIntrinsics
    right: CameraIntrinsics
    R: np.ndarray
    T: np.ndarray
    rect_left: np.ndarray | None = None
    rect_right: np.ndarray | None = None
    rectified_input: bool = False

    def __post_init__(self) -> None:
        self.R = np.asarray(self.R, dtype=np.float64)
        self.T = np.asarray(self.T, dtype=np.float64).reshape(3)

    @property
    def baseline(self) -> float:
        """Baseline in meters: the full camera separation |T|, which lies
        along the rectified x-axis after rectification."""
        return float(np.linalg.norm(self.T))

    @property
    def focal_px(self) -> float:
        return self.left.fx

    @property
    def principal_point(self) -> tuple[float, float]:
        return self.left.cx, self.left.cy

    def validate(self) -> None:
        self.left.validate("left")
        self.right.validate("right")
        if self.R.shape != (3, 3):
            raise CalibrationError(f"R: expected 3x3 matrix, got shape {self.R.shape}")
        deviation = float(np.abs(self.R @ self.R.T - np.eye(3)).max())
        if deviation > ORTHONORMALITY_TOL:
            raise CalibrationError(f"R: not orthonormal (max deviation {deviation:.3e})")
        det = float(np.linalg.det(self.R))
        if abs(det - 1.0) > ORTHONORMALITY_TOL:
            raise CalibrationError(f"R: determinant {det!r} != 1")
        if not np.all(np.isfinite(self.T)):
            raise CalibrationError("T: non-finite translation")
        if self.baseline <= 0.0:
            raise CalibrationError("T: non-positive baseline")
        if self.rectified_input:
            for name, h in (("rect_left", self.rect_left), ("rect_right", self.rect_right)):
                if h is not None and not np.allclose(h, np.eye(3)):
                    raise CalibrationError(
                        f"{name}: must be identity when rectified_input is true"
                    )


def make_rectified_rig(f: float, cx: float, cy: float, baseline: float) -> StereoRig:
    """Build an ideal already-rectified rig with shared intrinsics."""
    intr = CameraIntrinsics(fx=f, fy=f, cx=cx, cy=cy)
    return StereoRig(
        left=intr,
        right=intr,
        R=np.eye(3),
        T=np.array([-baseline, 0.0, 0.0]),
        rect_left=np.eye(3),
        rect_right=np.eye(3),
        rectified_input=True,
    )


def _intrinsics_from(obj: object, path: str) -> CameraIntrinsics:
    if not isinstance(obj, dict):
        raise CalibrationError(f"{path}: expected an object")
    values = {}
    for name in ("fx", "fy", "cx", "cy"):
        if name not in obj:
            raise CalibrationError(f"{path}: missing field '{name}'")
        try:
            values[name] = float(obj[name])
        except (TypeError, ValueError):
            raise CalibrationError(f"{path}.{name}: not a number ({obj[name]!r})") from None
    dist = obj.get("dist", [0.0] * 5)
    if not isinstance(dist, (list, tuple)) or len(dist) != 5:
        raise CalibrationError(f"{path}.dist: expected 5 coefficients [k1,k2,p1,p2,k3]")
    try:
        k1, k2, p1, p2, k3 = (float(c) for c in dist)
    except (TypeError, ValueError):
        raise CalibrationError(f"{path}.dist: non-numeric coefficient") from None
    intr = CameraIntrinsics(**values, k1=k1, k2=k2, p1=p1, p2=p2, k3=k3)
    intr.validate(path)
    return intr


def rig_from_dict(doc: dict) -> StereoRig:
    """Build and validate a StereoRig from a decoded calibration document."""
    if not isinstance(doc, dict):
        raise CalibrationError("calibration document must be an object")
    for name in ("left", "right", "R", "T"):
        if name not in doc:
            raise CalibrationError(f"missing field '{name}'")
    left = _intrinsics_from(doc["left"], "left")
    right = _intrinsics_from(doc["right"], "right")
    R = np.asarray(doc["R"], dtype=np.float64)
    if R.shape != (3, 3):
        raise CalibrationError(f"R: expected 3x3 matrix, got shape {R.shape}")
    T = np.asarray(doc["T"], dtype=np.float64).reshape(-1)
    if T.shape != (3,):
        raise CalibrationError(f"T: expected 3-vector, got {T.shape[0]} entries")
    rectified = bool(doc.get("rectified_input", False))
    rig = StereoRig(
        left=left,
        right=right,
        R=R,
        T=T,
        rect_left=np.eye(3) if rectified else None,
        rect_right=np.eye(3) if rectified else None,
        rectified_input=rectified,
    )
    rig.validate()
    return rig


def parse_calibration(text: str | bytes) -> StereoRig:
    """Parse a calibration JSON document into a validated StereoRig."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"malformed calibration document: {exc}") from exc
    return rig_from_dict(doc)


def _shared_intrinsics(rig: StereoRig) -> CameraIntrinsics:
    # Common rectified camera: mean fx as the single focal, mean principal
    # point, square pixels, zero distortion.
    f = 0.5 * (rig.left.fx + rig.right.fx)
    cx = 0.5 * (rig.left.cx + rig.right.cx)
    cy = 0.5 * (rig.left.cy + rig.right.cy)
    return CameraIntrinsics(fx=f, fy=f, cx=cx, cy=cy)


def compute_rectifying_transforms(
    rig: StereoRig,
) -> tuple[np.ndarray, np.ndarray, StereoRig]:
    """Derive row-aligning homographies for both views.

    Splits the relative rotation evenly between the cameras, then rotates
    both so the new x-axis runs along the baseline (Bouguet-style).  The
    returned homographies act on undistorted pixel coordinates; lens
    distortion is resolved in :func:`build_rectification_map`.  Rigs flagged
    as already rectified (or carrying precomputed homographies) pass through
    unchanged.
    """
    b_norm = rig.baseline
    if b_norm < MIN_BASELINE_M:
        raise CalibrationError("degenerate baseline: |T| below 1e-9 m")
    rig.validate()
    if rig.rectified_input:
        return np.eye(3), np.eye(3), rig
    if rig.rect_left is not None and rig.rect_right is not None:
        shared = _shared_intrinsics(rig)
        rect_rig = make_rectified_rig(shared.fx, shared.cx, shared.cy, rig.baseline)
        return rig.rect_left.copy(), rig.rect_right.copy(), rect_rig

    # Split R between the views: rotate each camera by half the relative
    # rotation so both end up at the averaged orientation.
    om = Rotation.from_matrix(rig.R).as_rotvec()
    r_half = Rotation.from_rotvec(-0.5 * om).as_matrix()  # inverse half-rotation

    # Baseline vector (left -> right camera center) in the averaged frame.
    b = -(r_half @ rig.T)
    e1 = b / b_norm
    axis = np.array([0.0, 0.0, 1.0])
    e2 = np.cross(axis, e1)
    if np.linalg.norm(e2) < 1e-12:  # baseline parallel to the optical axis
        axis = np.array([0.0, 1.0, 0.0])
        e2 = np.cross(axis, e1)
    e2 = e2 / np.linalg.norm(e2)
    e3 = np.cross(e1, e2)
    w_rot = np.stack([e1, e2, e3])  # rows: new basis, x along the baseline

    R1 = w_rot @ r_half.T
    R2 = w_rot @ r_half

    shared = _shared_intrinsics(rig)
    K_new = shared.matrix
    H_left = K_new @ R1 @ np.linalg.inv(rig.left.matrix)
    H_right = K_new @ R2 @ np.linalg.inv(rig.right.matrix)
    H_left /= H_left[2, 2]
    H_right /= H_right[2, 2]

    rect_rig = make_rectified_rig(shared.fx, shared.cx, shared.cy, b_norm)
    return H_left, H_right, rect_rig


@dataclass
class RectificationMap:
    """Per-destination-pixel source coordinates for one camera.

    ``src_x[v, u]`` / ``src_y[v, u]`` give the sub-pixel source location for
    destination pixel (u, v); entries equal to OUT_OF_BOUNDS mark pixels with
    no source.  The source image is assumed to share the map dimensions.
    """

    width: int
    height: int
    src_x: np.ndarray = field(repr=False)
    src_y: np.ndarray = field(repr=False)


def build_rectification_map(
    intr: CameraIntrinsics, H: np.ndarray, dims: tuple[int, int]
) -> RectificationMap:
    """Precompute the inverse warp for :func:`rectify_image`.

    For each destination pixel the source is ``H^-1 @ pixel`` pushed through
    the camera's distortion model: normalize with the intrinsics, apply
    Brown-Conrady distortion, re-project.  With zero distortion the source is
    ``H^-1 @ pixel`` directly (exact for the identity homography).
    """
    width, height = dims
    if width <= 0 or height <= 0:
        raise CalibrationError(f"invalid map dims {dims}")
    H = np.asarray(H, dtype=np.float64)
    if H.shape != (3, 3) or abs(np.linalg.det(H)) < 1e-12:
        raise CalibrationError("singular rectifying homography")
    H_inv = np.linalg.inv(H)

    uu, vv = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    denom = H_inv[2, 0] * uu + H_inv[2, 1] * vv + H_inv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        x_u = (H_inv[0, 0] * uu + H_inv[0, 1] * vv + H_inv[0, 2]) / denom
        y_u = (H_inv[1, 0] * uu + H_inv[1, 1] * vv + H_inv[1, 2]) / denom

    if intr.has_distortion:
        xn = (x_u - intr.cx) / intr.fx
        yn = (y_u - intr.cy) / intr.fy
        r2 = xn * xn + yn * yn
        radial = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
        xd = xn * radial + 2.0 * intr.p1 * xn * yn + intr.p2 * (r2 + 2.0 * xn * xn)
        yd = yn * radial + intr.p1 * (r2 + 2.0 * yn * yn) + 2.0 * intr.p2 * xn * yn
        src_x = intr.fx * xd + intr.cx
        src_y = intr.fy * yd + intr.cy
    else:
        src_x, src_y = x_u, y_u

    bad = (
        ~np.isfinite(src_x)
        | ~np.isfinite(src_y)
        | (src_x < 0.0)
        | (src_x > width - 1.0)
        | (src_y < 0.0)
        | (src_y > height - 1.0)
    )
    src_x = np.where(bad, OUT_OF_BOUNDS, src_x)
    src_y = np.where(bad, OUT_OF_BOUNDS, src_y)
    return RectificationMap(width=width, height=height, src_x=src_x, src_y=src_y)


def rectify_image(img: np.ndarray, rmap: RectificationMap) -> np.ndarray:
    """Warp an image through a rectification map with bilinear sampling.

    Accepts single-channel (H, W) or multi-channel (H, W, C) rasters.  Pixels
    flagged out-of-bounds in the map come out 0.  Integer inputs are rounded
    back to their dtype; float inputs stay float64.
    """
    if img.shape[0] != rmap.height or img.shape[1] != rmap.width:
        raise ValueError(
            f"image dims {img.shape[1]}x{img.shape[0]} do not match map "
            f"{rmap.width}x{rmap.height}"
        )
    height, width = rmap.height, rmap.width
    valid = (rmap.src_x >= 0.0) & (rmap.src_y >= 0.0)
    sx = np.where(valid, rmap.src_x, 0.0)
    sy = np.where(valid, rmap.src_y, 0.0)

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    wx = sx - x0
    wy = sy - y0

    data = img.astype(np.float64)
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    top = (1.0 - wx)[..., None] * data[y0, x0] + wx[..., None] * data[y0, x1]
    bot = (1.0 - wx)[..., None] * data[y1, x0] + wx[..., None] * data[y1, x1]
    out = (1.0 - wy)[..., None] * top + wy[..., None] * bot
    out[~valid] = 0.0
    if img.ndim == 2:
        out = out[:, :, 0]

    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(img.dtype)
    return out
