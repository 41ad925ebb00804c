"""Synthetic rectified stereo pairs with exact ground truth.

Scenes are fronto-parallel layers: a distant textured background plane plus
textured rectangles ("objects") at known (X, Z).  Every layer is rendered
with the same noise texture in both views at its integer disparity, so the
block matcher can recover the truth map exactly away from layer boundaries.
Texture is seeded uniform noise; identical specs yield identical pairs.

Scene documents:

    {"calib": {...calibration schema...},
     "width": 640, "height": 480,
     "background_z": 200.0, "texture_seed": 7, "max_disparity": 64,
     "frames": [{"frame_id": "f000",
                 "objects": [{"label": "pedestrian", "x": 0.0, "z": 3.0,
                              "width": 0.5, "height": 1.6}]}]}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calib import StereoRig, rig_from_dict
from .imgio import save_image, write_pgm16


class SceneError(ValueError):
    """A scene description violates an invariant."""


@dataclass(frozen=True)
class SceneObject:
    label: str
    x: float
    z: float
    width: float
    height: float


@dataclass
class SceneSpec:
    rig: StereoRig
    width: int
    height: int
    background_z: float
    objects: list[SceneObject]
    texture_seed: int
    max_disparity: int = 64
    frame_id: str = "frame_0000"


@dataclass
class GeneratedFrame:
    left: np.ndarray
    right: np.ndarray
    truth: np.ndarray
    detections: dict


def _object_geometry(spec: SceneSpec, obj: SceneObject, index: int):
    f = spec.rig.focal_px
    cx, cy = spec.rig.principal_point
    B = spec.rig.baseline
    if obj.z <= 0.0:
        raise SceneError(f"objects[{index}]: Z must be positive, got {obj.z}")
    d = int(np.rint(f * B / obj.z))
    if d < 1:
        raise SceneError(
            f"objects[{index}]: disparity rounds to zero at Z={obj.z} m "
            "(object too far to register)"
        )
    if d > spec.max_disparity:
        raise SceneError(
            f"objects[{index}]: disparity {d} exceeds max_disparity {spec.max_disparity}"
        )
    u_c = cx + f * obj.x / obj.z
    v_c = cy
    half_w = 0.5 * f * obj.width / obj.z
    half_h = 0.5 * f * obj.height / obj.z
    u0 = int(np.rint(u_c - half_w))
    u1 = int(np.rint(u_c + half_w))
    v0 = int(np.rint(v_c - half_h))
    v1 = int(np.rint(v_c + half_h))
    if u0 >= u1 or v0 >= v1:
        raise SceneError(f"objects[{index}]: degenerate projected box")
    if u0 < 0 or v0 < 0 or u1 > spec.width or v1 > spec.height or u0 - d < 0:
        raise SceneError(
            f"objects[{index}]: projected box [{u0},{v0},{u1},{v1}] (d={d}) "
            f"does not fit the {spec.width}x{spec.height} frame in both views"
        )
    return d, (u0, v0, u1, v1)


def generate_stereo_pair(spec: SceneSpec) -> GeneratedFrame:
    """Render a scene into (left, right, truth disparity, truth detections)."""
    if not spec.rig.rectified_input:
        raise SceneError("scene rig must be rectified")
    if spec.background_z <= 0.0:
        raise SceneError(f"background_z must be positive, got {spec.background_z}")
    f = spec.rig.focal_px
    B = spec.rig.baseline
    w, h = spec.width, spec.height
    d_bg = int(np.rint(f * B / spec.background_z))
    if d_bg > spec.max_disparity:
        raise SceneError(f"background disparity {d_bg} exceeds max_disparity")

    geometry = [_object_geometry(spec, obj, i) for i, obj in enumerate(spec.objects)]
    for i in range(len(spec.objects)):
        for j in range(i + 1, len(spec.objects)):
            if spec.objects[i].z == spec.objects[j].z:
                a, b = geometry[i][1], geometry[j][1]
                if a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]:
                    raise SceneError(
                        f"objects[{i}] and objects[{j}] overlap at equal Z={spec.objects[i].z}"
                    )

    # Background plane: one texture sampled by both views at offset d_bg.
    bg_rng = np.random.default_rng([spec.texture_seed, 0])
    bg_tex = bg_rng.integers(0, 256, size=(h, w + d_bg), dtype=np.uint8)
    left = bg_tex[:, :w].copy()
    right = bg_tex[:, d_bg : d_bg + w].copy()
    truth = np.full((h, w), d_bg, dtype=np.int32)

    # Far to near so closer objects occlude; each object reuses its texture
    # in the right view at its own disparity shift.
    order = sorted(range(len(spec.objects)), key=lambda i: (-spec.objects[i].z, i))
    for i in order:
        d, (u0, v0, u1, v1) = geometry[i]
        obj_rng = np.random.default_rng([spec.texture_seed, i + 1])
        tex = obj_rng.integers(0, 256, size=(v1 - v0, u1 - u0), dtype=np.uint8)
        left[v0:v1, u0:u1] = tex
        right[v0:v1, u0 - d : u1 - d] = tex
        truth[v0:v1, u0:u1] = d

    detections = {
        "frame_id": spec.frame_id,
        "image_width": w,
        "image_height": h,
        "detections": [
            {
                "label": spec.objects[i].label,
                "score": 1.0,
                "box": [float(c) for c in geometry[i][1]],
            }
            for i in range(len(spec.objects))
        ],
    }
    return GeneratedFrame(left=left, right=right, truth=truth, detections=detections)


def load_scene_file(text: str | bytes) -> tuple[dict, list[SceneSpec]]:
    """Parse a scene document into (raw calib dict, per-frame specs)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"malformed scene document: {exc}") from exc
    for name in ("calib", "width", "height", "background_z", "frames"):
        if name not in doc:
            raise SceneError(f"missing field '{name}'")
    rig = rig_from_dict(doc["calib"])
    seed = int(doc.get("texture_seed", 0))
    max_disparity = int(doc.get("max_disparity", 64))
    specs = []
    for i, frame in enumerate(doc["frames"]):
        objects = [
            SceneObject(
                label=str(o.get("label", "pedestrian")),
                x=float(o["x"]),
                z=float(o["z"]),
                width=float(o["width"]),
                height=float(o["height"]),
            )
            for o in frame.get("objects", [])
        ]
        specs.append(
            SceneSpec(
                rig=rig,
                width=int(doc["width"]),
                height=int(doc["height"]),
                background_z=float(doc["background_z"]),
                objects=objects,
                texture_seed=seed + i,
                max_disparity=max_disparity,
                frame_id=str(frame.get("frame_id", f"frame_{i:04d}")),
            )
        )
    return doc["calib"], specs


def write_scene_dataset(calib_doc: dict, specs: list[SceneSpec], out_dir) -> Path:
    """Render all frames and write a dataset runnable by the pipeline.

    Produces left/right PNGs, truth PGMs, detection documents, calib.json,
    and a manifest.json; returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calib.json").write_text(json.dumps(calib_doc, indent=2) + "\n")
    entries = []
    for spec in specs:
        frame = generate_stereo_pair(spec)
        names = {
            "left": f"left_{spec.frame_id}.png",
            "right": f"right_{spec.frame_id}.png",
            "detections": f"detections_{spec.frame_id}.json",
        }
        save_image(out / names["left"], frame.left)
        save_image(out / names["right"], frame.right)
        write_pgm16(out / f"truth_{spec.frame_id}.pgm", frame.truth)
        (out / names["detections"]).write_text(json.dumps(frame.detections, indent=2) + "\n")
        entries.append({"frame_id": spec.frame_id, **names})
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps({"frames": entries}, indent=2) + "\n")
    return manifest_path
