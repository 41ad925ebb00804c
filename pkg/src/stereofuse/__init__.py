"""Stereo block-matching distance estimation with detection fusion.

Pipeline: rectify a calibrated stereo pair, compute a SAD block-matching
disparity map, fuse non-zero disparities inside detected bounding boxes,
reproject the fused means to ego 3D coordinates, and render a bird's-eye
local dynamic map.
"""

from .calib import (
    CalibrationError,
    CameraIntrinsics,
    RectificationMap,
    StereoRig,
    build_rectification_map,
    compute_rectifying_transforms,
    make_rectified_rig,
    parse_calibration,
    rectify_image,
)
from .detections import (
    Detection,
    DetectionDocument,
    DetectionFormatError,
    detector_input_dims,
    filter_by_threshold,
    parse_detection_document,
    parse_detections,
    rescale_box,
)
from .disparity import (
    DisparityParams,
    compute_disparity_map,
    disparity_naive_oracle,
    sad_cost,
    to_grayscale,
)
from .fusion import BoxDisparityStats, FusedEstimate, collect_box_stats, fuse_detection
from .imgio import load_image, read_pgm16, save_image, write_pgm16
from .ldm import (
    LdmObject,
    LdmParams,
    apply_homography,
    build_ldm_homography,
    make_ldm_object,
    render_ldm_frame,
)
from .pipeline import (
    FrameReport,
    PipelineConfig,
    build_rectification_context,
    run_frame,
    run_sequence,
)
from .reproject import WorldPoint, disparity_to_depth, ground_distance, pixel_to_world
from .synth import SceneObject, SceneSpec, generate_stereo_pair, load_scene_file

__version__ = "0.1.0"
