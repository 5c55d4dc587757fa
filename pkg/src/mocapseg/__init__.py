"""mocapseg: motion-capture semantic segmentation toolkit.

Parses BVH motion capture, renders normalized RGB motion images, and
trains a dilated temporal fully-convolutional network that labels every
frame with a motion primitive. Includes the label-noise robustness
experiment harness and a synthetic dataset generator.
"""

from .bvh import EndSite, Joint, MotionSequence, Skeleton, parse_bvh, serialize_bvh
from .dtfcn import (
    CANONICAL_CHANNELS,
    DESK_CHANNELS,
    Model,
    NetConfig,
    TrainConfig,
    build_model,
    fold_seed,
    load_checkpoint,
    padding_schedule,
    parameter_count,
    predict_labels,
    receptive_field,
    save_checkpoint,
    train,
)
from .errors import BvhParseError, DataError, MocapsegError, NumericError
from .estimators import DTFCNSegmenter, MotionImageEncoder
from .experiments import (
    Dataset,
    MetricsReport,
    NoiseSpec,
    apply_noise,
    boundary_mask,
    confusion,
    evaluate_model,
    find_boundaries,
    inject_boundary_noise,
    inject_random_noise,
    kfold_plan,
    load_manifest_dataset,
    per_frame_accuracy,
    run_experiment,
)
from .kinematics import GLOBAL, LOCAL, CartesianSequence, forward_kinematics, to_cartesian
from .labels import (
    CLASS_NAMES,
    LabelTrack,
    load_label_json,
    save_label_json,
    segments_from_classes,
)
from .motion_image import (
    DEFAULT_HEIGHT,
    MotionImage,
    channel_extrema,
    export_png,
    import_png,
    motion_image_from_cartesian,
    normalize_to_rgb,
    render_label_strip,
    resize_vertical_bicubic,
)
from .synthetic import (
    SynthSpec,
    build_skeleton,
    class_names_for,
    synthesize_dataset,
    synthesize_sequences,
    write_dataset_files,
)

__version__ = "0.1.0"

__all__ = [
    "BvhParseError",
    "CANONICAL_CHANNELS",
    "CLASS_NAMES",
    "CartesianSequence",
    "DESK_CHANNELS",
    "DEFAULT_HEIGHT",
    "DTFCNSegmenter",
    "DataError",
    "Dataset",
    "EndSite",
    "GLOBAL",
    "Joint",
    "LOCAL",
    "LabelTrack",
    "MetricsReport",
    "MocapsegError",
    "Model",
    "MotionImage",
    "MotionImageEncoder",
    "MotionSequence",
    "NetConfig",
    "NoiseSpec",
    "NumericError",
    "Skeleton",
    "SynthSpec",
    "TrainConfig",
    "apply_noise",
    "boundary_mask",
    "build_model",
    "build_skeleton",
    "channel_extrema",
    "class_names_for",
    "confusion",
    "evaluate_model",
    "export_png",
    "find_boundaries",
    "fold_seed",
    "forward_kinematics",
    "import_png",
    "inject_boundary_noise",
    "inject_random_noise",
    "kfold_plan",
    "load_checkpoint",
    "load_label_json",
    "load_manifest_dataset",
    "motion_image_from_cartesian",
    "normalize_to_rgb",
    "padding_schedule",
    "parameter_count",
    "parse_bvh",
    "per_frame_accuracy",
    "predict_labels",
    "receptive_field",
    "render_label_strip",
    "resize_vertical_bicubic",
    "run_experiment",
    "save_checkpoint",
    "save_label_json",
    "segments_from_classes",
    "serialize_bvh",
    "synthesize_dataset",
    "synthesize_sequences",
    "to_cartesian",
    "train",
    "write_dataset_files",
]
