"""Detector output ingestion: parsing, confidence filtering, box rescaling.

One detection document per frame:

    {"frame_id": str, "image_width": int, "image_height": int,
     "detections": [{"label": str, "score": float,
                     "box": [x_min, y_min, x_max, y_max]}]}

Boxes are half-open pixel rectangles in the declared image space; carrying
the space dimensions on every detection lets detector-resolution boxes and
rectified-image boxes interoperate without guesswork.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

DETECTOR_SHORT_SIDE = 480
DETECTOR_LONG_SIDE = 640


class DetectionFormatError(ValueError):
    """A detection document or entry violates the schema."""


@dataclass(frozen=True)
class Detection:
    label: str
    score: float
    box: tuple[float, float, float, float]
    image_width: int
    image_height: int

    def validate(self, path: str = "detection") -> None:
        if not 0.0 <= self.score <= 1.0:
            raise DetectionFormatError(f"{path}.score: {self.score} outside [0, 1]")
        x_min, y_min, x_max, y_max = self.box
        if x_min >= x_max or y_min >= y_max:
            raise DetectionFormatError(f"{path}.box: degenerate box {self.box}")
        if x_min < 0 or y_min < 0 or x_max > self.image_width or y_max > self.image_height:
            raise DetectionFormatError(
                f"{path}.box: {self.box} outside image "
                f"{self.image_width}x{self.image_height}"
            )


@dataclass(frozen=True)
class DetectionDocument:
    frame_id: str
    image_width: int
    image_height: int
    detections: tuple[Detection, ...]


def parse_detection_document(text: str | bytes) -> DetectionDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectionFormatError(f"malformed detection document: {exc}") from exc
    if not isinstance(doc, dict):
        raise DetectionFormatError("detection document must be an object")
    for name in ("frame_id", "image_width", "image_height", "detections"):
        if name not in doc:
            raise DetectionFormatError(f"missing field '{name}'")
    width = int(doc["image_width"])
    height = int(doc["image_height"])
    if width <= 0 or height <= 0:
        raise DetectionFormatError(f"invalid image dims {width}x{height}")
    entries = doc["detections"]
    if not isinstance(entries, list):
        raise DetectionFormatError("detections: expected a list")
    parsed = []
    for i, entry in enumerate(entries):
        path = f"detections[{i}]"
        if not isinstance(entry, dict):
            raise DetectionFormatError(f"{path}: expected an object")
        try:
            label = str(entry["label"])
            score = float(entry["score"])
            box = entry["box"]
        except KeyError as exc:
            raise DetectionFormatError(f"{path}: missing field {exc}") from None
        if not isinstance(box, (list, tuple)) or len(box) != 4:
            raise DetectionFormatError(f"{path}.box: expected [x_min, y_min, x_max, y_max]")
        det = Detection(
            label=label,
            score=score,
            box=tuple(float(c) for c in box),
            image_width=width,
            image_height=height,
        )
        det.validate(path)
        parsed.append(det)
    return DetectionDocument(
        frame_id=str(doc["frame_id"]),
        image_width=width,
        image_height=height,
        detections=tuple(parsed),
    )


def parse_detections(text: str | bytes) -> list[Detection]:
    """Parse a detection document, returning the validated detections."""
    return list(parse_detection_document(text).detections)


def filter_by_threshold(dets: list[Detection], tau: float) -> list[Detection]:
    """Keep detections with score >= tau, preserving order."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"threshold {tau} outside [0, 1]")
    return [d for d in dets if d.score >= tau]


def detector_input_dims(orig_w: int, orig_h: int) -> tuple[int, int]:
    """Detector resize rule: shorter side to 480, longer to 640, orientation kept."""
    if orig_w <= 0 or orig_h <= 0:
        raise ValueError(f"invalid dims {orig_w}x{orig_h}")
    if orig_w >= orig_h:
        return DETECTOR_LONG_SIDE, DETECTOR_SHORT_SIDE
    return DETECTOR_SHORT_SIDE, DETECTOR_LONG_SIDE


def rescale_box(det: Detection, to_w: int, to_h: int) -> Detection:
    """Scale a detection into a new image space, clamping to its bounds."""
    if to_w <= 0 or to_h <= 0:
        raise ValueError(f"invalid target dims {to_w}x{to_h}")
    sx = to_w / det.image_width
    sy = to_h / det.image_height
    x_min, y_min, x_max, y_max = det.box
    box = (
        min(max(x_min * sx, 0.0), float(to_w)),
        min(max(y_min * sy, 0.0), float(to_h)),
        min(max(x_max * sx, 0.0), float(to_w)),
        min(max(y_max * sy, 0.0), float(to_h)),
    )
    return replace(det, box=box, image_width=to_w, image_height=to_h)
