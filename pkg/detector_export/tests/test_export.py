import json

import numpy as np
import pytest
from PIL import Image

from detector_export.backends import ModelLoadError, load_backend
from detector_export.cli import main as cli_main
from detector_export.export import (
    ExportConfig,
    detector_dims,
    export_detections,
    write_documents,
)

# the consuming pipeline's parser is the schema authority for round trips
from stereofuse.detections import parse_detection_document, parse_detections


@pytest.fixture(scope="module")
def fixtures(tmp_path_factory):
    """Three fixture images: a real person photo, a blank frame, noise."""
    from skimage import data

    root = tmp_path_factory.mktemp("fixtures")
    person = root / "person.png"
    Image.fromarray(data.astronaut()).save(person)
    blank = root / "blank.png"
    Image.fromarray(np.zeros((480, 640, 3), dtype=np.uint8)).save(blank)
    noise = root / "noise.png"
    rng = np.random.default_rng(3)
    Image.fromarray(rng.integers(0, 256, (600, 800, 3), dtype=np.uint8)).save(noise)
    return [person, blank, noise]


def test_exporter_round_trip_acceptance(fixtures):
    """Exported documents all parse cleanly; the person fixture yields a person box."""
    items = export_detections(fixtures, ExportConfig())
    assert all(item.ok for item in items)
    person_boxes = 0
    for item in items:
        doc = parse_detection_document(json.dumps(item.document))  # raises on violation
        assert doc.frame_id == item.path.stem
        for det in doc.detections:
            assert 0 <= det.box[0] < det.box[2] <= doc.image_width
            assert 0 <= det.box[1] < det.box[3] <= doc.image_height
        if item.path.stem == "person":
            person_boxes = sum(1 for d in doc.detections if d.label == "person")
    assert person_boxes >= 1
    print("[ACCEPTANCE] exporter round trip (3 fixtures, schema-clean, person found): PASS")


def test_blank_image_is_schema_valid(fixtures):
    blank = [p for p in fixtures if p.stem == "blank"]
    items = export_detections(blank, ExportConfig())
    assert items[0].ok
    dets = parse_detections(json.dumps(items[0].document))
    assert dets == []


def test_corrupt_file_reported_per_item(fixtures, tmp_path):
    corrupt = tmp_path / "broken.png"
    corrupt.write_bytes(b"this is not an image")
    items = export_detections([fixtures[0], corrupt], ExportConfig())
    assert items[0].ok
    assert not items[1].ok
    assert "broken.png" in str(items[1].path)


def test_documents_declare_detector_dims(fixtures):
    items = export_detections(fixtures, ExportConfig())
    by_stem = {item.path.stem: item.document for item in items}
    assert (by_stem["person"]["image_width"], by_stem["person"]["image_height"]) == (640, 480)
    assert (by_stem["noise"]["image_width"], by_stem["noise"]["image_height"]) == (640, 480)


def test_detector_dims_rule():
    assert detector_dims(1280, 960) == (640, 480)
    assert detector_dims(960, 1280) == (480, 640)
    assert detector_dims(640, 480) == (640, 480)


def test_score_floor_filters(fixtures):
    person = [fixtures[0]]
    kept = export_detections(person, ExportConfig(score_floor=0.0))[0]
    dropped = export_detections(person, ExportConfig(score_floor=0.99))[0]
    assert len(kept.document["detections"]) >= 1
    assert dropped.document["detections"] == []


def test_label_map_override(fixtures):
    cfg = ExportConfig(label_map={"face": "pedestrian"})
    item = export_detections([fixtures[0]], cfg)[0]
    labels = {d["label"] for d in item.document["detections"]}
    assert labels == {"pedestrian"}


def test_unknown_model_rejected():
    with pytest.raises(ModelLoadError, match="unknown model"):
        load_backend("not-a-model")


def test_write_documents(fixtures, tmp_path):
    items = export_detections(fixtures, ExportConfig())
    written = write_documents(items, tmp_path / "dets")
    assert len(written) == 3
    for path in written:
        parse_detection_document(path.read_text())


def test_cli_end_to_end(fixtures, tmp_path):
    out = tmp_path / "out"
    pattern = str(fixtures[0].parent / "*.png")
    assert cli_main(["--images", pattern, "--out", str(out)]) == 0
    docs = sorted(out.glob("detections_*.json"))
    assert len(docs) == 3
    for doc in docs:
        parse_detection_document(doc.read_text())


def test_cli_continues_past_corrupt_file(fixtures, tmp_path):
    broken_dir = tmp_path / "imgs"
    broken_dir.mkdir()
    (broken_dir / "a_broken.png").write_bytes(b"junk")
    Image.fromarray(np.zeros((100, 100, 3), dtype=np.uint8)).save(broken_dir / "b_ok.png")
    out = tmp_path / "out"
    code = cli_main(["--images", str(broken_dir / "*.png"), "--out", str(out)])
    assert code == 1  # item failure, not a hard stop
    assert (out / "detections_b_ok.json").exists()


def test_cli_no_matches():
    assert cli_main(["--images", "/nonexistent/*.png", "--out", "/tmp/x"]) == 2
