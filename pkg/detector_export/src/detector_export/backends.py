"""Pluggable pretrained detector backends.

A backend takes an 8-bit RGB array and returns raw hits as
``(class_name, score, (x_min, y_min, x_max, y_max))`` in pixel coordinates
of that array.  Class names are mapped to output labels by the exporter's
label map.

Bundled default: the LBP frontal-face cascade that ships inside
scikit-image, which needs no network access.  It is a hard classifier, so
hits carry a fixed nominal score, and its boxes localize the face region of
a person rather than the full body.  The torchvision backend
(``torchvision:<model>``, e.g. ``torchvision:fasterrcnn_resnet50_fpn``)
yields true full-body COCO detections when its pretrained weights are
available locally.
"""
from __future__ import annotations

import numpy as np

CASCADE_MODEL_ID = "skimage-lbp-face"
CASCADE_SCORE = 0.9

# COCO class ids used by torchvision detection models (subset of interest;
# anything unlisted is exported as "class_<id>")
COCO_CLASSES = {
    1: "person",
    2: "bicycle",
    3: "car",
    4: "motorcycle",
    6: "bus",
    8: "truck",
}


class ModelLoadError(RuntimeError):
    """The requested detector backend could not be constructed."""


class LbpFaceCascadeBackend:
    """scikit-image LBP frontal-face cascade (offline, bundled weights)."""

    native_class = "face"

    def __init__(self):
        try:
            from skimage import data
            from skimage.feature import Cascade
        except ImportError as exc:
            raise ModelLoadError(f"scikit-image unavailable: {exc}") from exc
        self._cascade = Cascade(data.lbp_frontal_face_cascade_filename())

    def detect(self, rgb: np.ndarray):
        height, width = rgb.shape[:2]
        max_side = min(width, height)
        hits = self._cascade.detect_multi_scale(
            img=rgb,
            scale_factor=1.15,
            step_ratio=1,
            min_size=(24, 24),
            max_size=(max_side, max_side),
        )
        results = []
        for hit in hits:
            x0 = float(max(hit["c"], 0))
            y0 = float(max(hit["r"], 0))
            x1 = float(min(hit["c"] + hit["width"], width))
            y1 = float(min(hit["r"] + hit["height"], height))
            if x0 < x1 and y0 < y1:
                results.append((self.native_class, CASCADE_SCORE, (x0, y0, x1, y1)))
        return results


class TorchvisionBackend:
    """Any torchvision detection model with default pretrained weights."""

    def __init__(self, model_name: str):
        try:
            import torch
            from torchvision.models import detection as tv_detection
        except ImportError as exc:
            raise ModelLoadError(f"torchvision unavailable: {exc}") from exc
        factory = getattr(tv_detection, model_name, None)
        if factory is None:
            raise ModelLoadError(f"unknown torchvision detection model {model_name!r}")
        try:
            self._model = factory(weights="DEFAULT")
        except Exception as exc:
            raise ModelLoadError(
                f"could not load pretrained weights for {model_name!r}: {exc}"
            ) from exc
        self._model.eval()
        self._torch = torch

    def detect(self, rgb: np.ndarray):
        torch = self._torch
        tensor = torch.from_numpy(rgb.copy()).permute(2, 0, 1).float() / 255.0
        with torch.no_grad():
            output = self._model([tensor])[0]
        results = []
        for box, label, score in zip(
            output["boxes"].tolist(), output["labels"].tolist(), output["scores"].tolist()
        ):
            name = COCO_CLASSES.get(int(label), f"class_{int(label)}")
            results.append((name, float(score), tuple(box)))
        return results


def load_backend(model_id: str):
    if model_id == CASCADE_MODEL_ID:
        return LbpFaceCascadeBackend()
    if model_id.startswith("torchvision:"):
        return TorchvisionBackend(model_id.split(":", 1)[1])
    raise ModelLoadError(
        f"unknown model {model_id!r} (expected '{CASCADE_MODEL_ID}' or 'torchvision:<name>')"
    )
