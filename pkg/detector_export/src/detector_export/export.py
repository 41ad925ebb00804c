"""Batch detector export.

Runs a pretrained backend over images and emits one detection document per
image:

    {"frame_id": <stem>, "image_width": W, "image_height": H,
     "detections": [{"label": str, "score": float,
                     "box": [x_min, y_min, x_max, y_max]}]}

Images are resized to the detector's working resolution first (shorter side
480, longer side 640, orientation preserved); the document declares those
dimensions and the boxes live in that space.  No confidence thresholding
and no rescaling into rectified coordinates happen here: both belong to the
consuming pipeline.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import CASCADE_MODEL_ID, load_backend

DETECTOR_SHORT_SIDE = 480
DETECTOR_LONG_SIDE = 640

DEFAULT_LABEL_MAP = {"face": "person", "person": "person"}


@dataclass
class ExportConfig:
    model: str = CASCADE_MODEL_ID
    score_floor: float = 0.0
    label_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LABEL_MAP))


@dataclass
class ExportItem:
    path: Path
    document: dict | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def detector_dims(orig_w: int, orig_h: int) -> tuple[int, int]:
    """Working resolution: shorter side to 480, longer to 640."""
    if orig_w >= orig_h:
        return DETECTOR_LONG_SIDE, DETECTOR_SHORT_SIDE
    return DETECTOR_SHORT_SIDE, DETECTOR_LONG_SIDE


def _load_resized(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        width, height = detector_dims(*rgb.size)
        return np.asarray(rgb.resize((width, height), Image.BILINEAR), dtype=np.uint8)


def export_detections(images: list[str | Path], cfg: ExportConfig) -> list[ExportItem]:
    """Run the configured model over every image; failures are per-item."""
    backend = load_backend(cfg.model)  # model load failure propagates
    items: list[ExportItem] = []
    for raw_path in images:
        path = Path(raw_path)
        try:
            rgb = _load_resized(path)
            height, width = rgb.shape[:2]
            detections = []
            for native, score, box in backend.detect(rgb):
                if score < cfg.score_floor:
                    continue
                detections.append(
                    {
                        "label": cfg.label_map.get(native, native),
                        "score": round(float(score), 6),
                        "box": [float(c) for c in box],
                    }
                )
            document = {
                "frame_id": path.stem,
                "image_width": width,
                "image_height": height,
                "detections": detections,
            }
            items.append(ExportItem(path=path, document=document))
        except Exception as exc:
            items.append(ExportItem(path=path, error=f"{type(exc).__name__}: {exc}"))
    return items


def write_documents(items: list[ExportItem], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for item in items:
        if not item.ok:
            continue
        target = out / f"detections_{item.document['frame_id']}.json"
        target.write_text(json.dumps(item.document, indent=2) + "\n")
        written.append(target)
    return written
