"""Part-based pedestrian detection toolkit.

Post-processes part-level detections (heads, legs) into whole-body
boxes via fixed body-proportion restore rules and IoU fusion, evaluates
the result against ground truth, and provides the supporting analysis
pieces: analytical parameter/FLOP counting with reference forward
passes, an IoU loss with distance attention and its gradient, a warmup
+ cosine LR schedule, and a deterministic occlusion-scene simulator.
"""
from .complexity import (
    ComplexityDelta,
    LayerSpec,
    ModelSpec,
    SpecError,
    SpeedupRatio,
    compare,
    load_model_spec,
    save_model_spec,
    speedup_ratio,
    summarize,
)
from .evaluation import (
    EvalReport,
    GroundTruth,
    MatchedDetection,
    UndefinedMetricError,
    average_precision,
    evaluate_run,
    match_detections,
)
from .fusion import (
    DEFAULT_RULES,
    Detection,
    FusionConfig,
    HEAD_RULE,
    LEG_RULE,
    NmsConfig,
    RestoreRule,
    RuleMismatchError,
    UnknownClassError,
    classify,
    fuse,
    nms,
    restore,
    run_pipeline,
)
from .geometry import (
    BBox,
    EmptyBoxError,
    InvalidBoxError,
    clip_to_image,
    enclosing_box,
    intersection_area,
    iou,
)
from .io import (
    ConfigError,
    DataError,
    RunConfig,
    load_run_config,
    load_scene_config,
    read_detections_jsonl,
    read_ground_truth_jsonl,
    write_detections_jsonl,
    write_ground_truth_jsonl,
)
from .losses import BoundaryError, distance_penalty, iou_loss, loss_gradient, wiou_loss
from .micronn import (
    ConvKernelSet,
    FeatureMap,
    MacCounter,
    SEWeights,
    ShapeMismatchError,
    conv2d_direct,
    ghost_forward,
    se_forward,
)
from .schedule import ScheduleConfig, emit_schedule, lr_at, schedule_csv
from .simulate import (
    Occluder,
    Pedestrian,
    PlacementError,
    Scene,
    SceneConfig,
    derive_head,
    derive_leg,
    generate,
    generate_scenes,
    visibility,
)
from .zoo import BUILTIN_NAMES, build_baseline, build_ghost_neck, build_se, builtin_spec

__version__ = "0.1.0"

__all__ = [
    "BBox", "InvalidBoxError", "EmptyBoxError", "iou", "intersection_area",
    "enclosing_box", "clip_to_image",
    "Detection", "RestoreRule", "FusionConfig", "NmsConfig", "HEAD_RULE",
    "LEG_RULE", "DEFAULT_RULES", "UnknownClassError", "RuleMismatchError",
    "classify", "restore", "fuse", "nms", "run_pipeline",
    "GroundTruth", "MatchedDetection", "EvalReport", "UndefinedMetricError",
    "match_detections", "average_precision", "evaluate_run",
    "BoundaryError", "iou_loss", "distance_penalty", "wiou_loss", "loss_gradient",
    "FeatureMap", "ConvKernelSet", "SEWeights", "MacCounter",
    "ShapeMismatchError", "conv2d_direct", "se_forward", "ghost_forward",
    "LayerSpec", "ModelSpec", "SpecError", "SpeedupRatio", "ComplexityDelta",
    "speedup_ratio", "summarize", "compare", "load_model_spec", "save_model_spec",
    "BUILTIN_NAMES", "builtin_spec", "build_baseline", "build_se", "build_ghost_neck",
    "ScheduleConfig", "lr_at", "emit_schedule", "schedule_csv",
    "SceneConfig", "Scene", "Pedestrian", "Occluder", "PlacementError",
    "derive_head", "derive_leg", "visibility", "generate", "generate_scenes",
    "ConfigError", "DataError", "RunConfig", "load_run_config", "load_scene_config",
    "read_detections_jsonl", "write_detections_jsonl",
    "read_ground_truth_jsonl", "write_ground_truth_jsonl",
    "__version__",
]
