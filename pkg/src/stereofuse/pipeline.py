"""End-to-end frame pipeline and sequence runner.

Per frame: rectify -> disparity -> threshold-filter -> rescale boxes ->
fuse -> reproject -> render LDM.  Sequences write one report JSON and one
LDM PNG per frame plus a summary; frames are independent, so failures are
recorded and never take down the run unless every frame fails.

Report files contain no timings: stage timings live on the in-memory
FrameReport and in summary.json, keeping report and raster bytes identical
across runs and worker counts.
"""
from __future__ import annotations

import json
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calib import (
    RectificationMap,
    StereoRig,
    build_rectification_map,
    compute_rectifying_transforms,
    rectify_image,
)
from .detections import (
    DetectionDocument,
    filter_by_threshold,
    parse_detection_document,
    rescale_box,
)
from .disparity import DisparityParams, compute_disparity_map, to_grayscale
from .fusion import collect_box_stats, fuse_stats
from .imgio import load_image, save_image
from .ldm import LdmObject, LdmParams, make_ldm_object, render_ldm_frame
from .reproject import WorldPoint, ground_distance, pixel_to_world

STAGES = ("rectify", "disparity", "filter", "rescale", "fuse", "reproject", "render")


class PipelineError(RuntimeError):
    def __init__(self, frame_id: str, stage: str, cause: Exception):
        super().__init__(f"frame {frame_id}: {stage}: {cause}")
        self.frame_id = frame_id
        self.stage = stage


@dataclass
class PipelineConfig:
    threshold: float = 0.8
    labels: tuple[str, ...] | None = None
    block_w: int = 5
    block_h: int = 5
    block_step: int | None = None  # None -> block width (block granularity)
    max_disparity: int = 64
    min_valid: int = 25
    side_range: float = 2.5
    front_range: float = 6.0
    ldm_w: int = 500
    ldm_h: int = 600
    ldm_offset: int = 20
    jobs: int = 1
    backend: str | None = None

    def disparity_params(self) -> DisparityParams:
        return DisparityParams(
            block_w=self.block_w,
            block_h=self.block_h,
            max_disparity=self.max_disparity,
            block_step=self.block_step,
        )

    def ldm_params(self) -> LdmParams:
        return LdmParams(
            base_w=self.ldm_w,
            base_h=self.ldm_h,
            offset=self.ldm_offset,
            side_range=self.side_range,
            front_range=self.front_range,
        )


@dataclass
class RectificationContext:
    """Precomputed rectification for one rig at one image size."""

    rect_rig: StereoRig
    map_left: RectificationMap | None = None
    map_right: RectificationMap | None = None


def build_rectification_context(rig: StereoRig, dims: tuple[int, int]) -> RectificationContext:
    H_left, H_right, rect_rig = compute_rectifying_transforms(rig)
    if rig.rectified_input:
        return RectificationContext(rect_rig=rect_rig)
    return RectificationContext(
        rect_rig=rect_rig,
        map_left=build_rectification_map(rig.left, H_left, dims),
        map_right=build_rectification_map(rig.right, H_right, dims),
    )


@dataclass
class ReportObject:
    label: str
    score: float
    box: tuple[float, float, float, float]
    mean_disparity: float | None
    valid_pixel_count: int
    world: WorldPoint | None
    distance_euclid: float | None
    distance_z: float | None
    in_view: bool | None


@dataclass
class FrameReport:
    frame_id: str
    objects: list[ReportObject]
    timings_ms: dict[str, float] = field(default_factory=dict)


def report_to_dict(report: FrameReport) -> dict:
    entries = []
    for obj in report.objects:
        world = None
        if obj.world is not None:
            world = {"X": obj.world.X, "Y": obj.world.Y, "Z": obj.world.Z}
        entries.append(
            {
                "label": obj.label,
                "score": obj.score,
                "box": list(obj.box),
                "mean_disparity": obj.mean_disparity,
                "valid_pixel_count": obj.valid_pixel_count,
                "world": world,
                "distance_euclid": obj.distance_euclid,
                "distance_z": obj.distance_z,
                "in_view": obj.in_view,
            }
        )
    return {"frame_id": report.frame_id, "objects": entries}


def report_to_json(report: FrameReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


@contextmanager
def _stage(name: str, frame_id: str, timings: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(frame_id, name, exc) from exc
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def run_frame(
    rig: StereoRig,
    left_img: np.ndarray,
    right_img: np.ndarray,
    detections_doc: DetectionDocument | str | bytes,
    config: PipelineConfig = PipelineConfig(),
    rect_ctx: RectificationContext | None = None,
) -> tuple[FrameReport, np.ndarray]:
    """Process one stereo frame into a report and an LDM raster."""
    doc = (
        parse_detection_document(detections_doc)
        if isinstance(detections_doc, (str, bytes))
        else detections_doc
    )
    frame_id = doc.frame_id
    timings: dict[str, float] = {}

    with _stage("rectify", frame_id, timings):
        if left_img.shape[:2] != right_img.shape[:2]:
            raise ValueError(
                f"left {left_img.shape} and right {right_img.shape} dims differ"
            )
        if rect_ctx is None:
            dims = (left_img.shape[1], left_img.shape[0])
            rect_ctx = build_rectification_context(rig, dims)
        if rect_ctx.map_left is not None:
            left_img = rectify_image(left_img, rect_ctx.map_left)
            right_img = rectify_image(right_img, rect_ctx.map_right)
        left_gray = to_grayscale(left_img) if left_img.ndim == 3 else left_img
        right_gray = to_grayscale(right_img) if right_img.ndim == 3 else right_img

    with _stage("disparity", frame_id, timings):
        dmap = compute_disparity_map(
            left_gray, right_gray, config.disparity_params(), backend=config.backend
        )

    with _stage("filter", frame_id, timings):
        dets = filter_by_threshold(list(doc.detections), config.threshold)
        if config.labels:
            dets = [d for d in dets if d.label in config.labels]

    with _stage("rescale", frame_id, timings):
        height, width = left_gray.shape
        dets = [rescale_box(d, width, height) for d in dets]

    with _stage("fuse", frame_id, timings):
        stats_list = [collect_box_stats(dmap, d.box) for d in dets]
        fused = [fuse_stats(s, config.min_valid) for s in stats_list]

    ldm_params = config.ldm_params()
    objects: list[ReportObject] = []
    ldm_objects: list[LdmObject] = []
    with _stage("reproject", frame_id, timings):
        for det, stats, estimate in zip(dets, stats_list, fused):
            if estimate is None:
                objects.append(
                    ReportObject(
                        label=det.label,
                        score=det.score,
                        box=det.box,
                        mean_disparity=None,
                        valid_pixel_count=stats.count,
                        world=None,
                        distance_euclid=None,
                        distance_z=None,
                        in_view=None,
                    )
                )
                continue
            u, v = estimate.pixel
            world = pixel_to_world(u, v, estimate.mean_disparity, rect_ctx.rect_rig)
            ldm_obj = make_ldm_object(
                det.label, world, ground_distance(world), world.Z, ldm_params
            )
            ldm_objects.append(ldm_obj)
            objects.append(
                ReportObject(
                    label=det.label,
                    score=det.score,
                    box=det.box,
                    mean_disparity=estimate.mean_disparity,
                    valid_pixel_count=estimate.stats.count,
                    world=world,
                    distance_euclid=ldm_obj.distance_euclid,
                    distance_z=ldm_obj.distance_z,
                    in_view=ldm_obj.in_view,
                )
            )

    with _stage("render", frame_id, timings):
        raster = render_ldm_frame(ldm_objects, ldm_params)

    return FrameReport(frame_id=frame_id, objects=objects, timings_ms=timings), raster


def _load_manifest(manifest_path: Path) -> list[dict]:
    doc = json.loads(manifest_path.read_text())
    frames = doc.get("frames")
    if not isinstance(frames, list):
        raise ValueError("manifest must contain a 'frames' list")
    for i, entry in enumerate(frames):
        for key in ("left", "right", "detections"):
            if key not in entry:
                raise ValueError(f"frames[{i}]: missing '{key}' path")
    return frames


def run_sequence(
    rig: StereoRig,
    manifest_path: str | Path,
    out_dir: str | Path,
    config: PipelineConfig = PipelineConfig(),
) -> int:
    """Process every frame in a manifest; returns the process exit status.

    Writes report_<frame_id>.json and ldm_<frame_id>.png per frame plus
    summary.json.  Per-frame failures are recorded in the summary; the exit
    status is nonzero only when the manifest is unreadable or every frame
    fails.
    """
    manifest_path = Path(manifest_path)
    try:
        frames = _load_manifest(manifest_path)
    except (OSError, ValueError) as exc:
        print(f"stereofuse: unreadable manifest {manifest_path}: {exc}", file=sys.stderr)
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = manifest_path.parent

    contexts: dict[tuple[int, int], RectificationContext] = {}
    ctx_lock = threading.Lock()

    def context_for(dims: tuple[int, int]) -> RectificationContext:
        with ctx_lock:
            if dims not in contexts:
                contexts[dims] = build_rectification_context(rig, dims)
            return contexts[dims]

    def process(index: int, entry: dict):
        frame_id = str(entry.get("frame_id", f"frame_{index:04d}"))
        try:
            left = load_image(base / entry["left"])
            right = load_image(base / entry["right"])
            doc = parse_detection_document((base / entry["detections"]).read_text())
            ctx = context_for((left.shape[1], left.shape[0]))
            report, raster = run_frame(rig, left, right, doc, config, rect_ctx=ctx)
            (out / f"report_{report.frame_id}.json").write_text(report_to_json(report))
            save_image(out / f"ldm_{report.frame_id}.png", raster)
            return index, report.frame_id, report.timings_ms, None
        except PipelineError as exc:
            return index, frame_id, None, (exc.stage, str(exc))
        except Exception as exc:
            return index, frame_id, None, ("input", f"frame {frame_id}: {exc}")

    if config.jobs > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(process, range(len(frames)), frames))
    else:
        results = [process(i, entry) for i, entry in enumerate(frames)]
    results.sort(key=lambda r: r[0])

    errors = []
    frame_summaries = []
    aggregate: dict[str, float] = {name: 0.0 for name in STAGES}
    ok = 0
    for _, frame_id, timings, failure in results:
        if failure is None:
            ok += 1
            frame_summaries.append(
                {"frame_id": frame_id, "status": "ok", "timings_ms": timings}
            )
            for name, ms in timings.items():
                aggregate[name] = aggregate.get(name, 0.0) + ms
        else:
            stage, message = failure
            errors.append({"frame_id": frame_id, "stage": stage, "message": message})
            frame_summaries.append({"frame_id": frame_id, "status": "failed"})

    summary = {
        "frame_count": len(frames),
        "ok_count": ok,
        "error_count": len(errors),
        "errors": errors,
        "aggregate_timings_ms": aggregate,
        "frames": frame_summaries,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    if frames and ok == 0:
        return 1
    return 0
