"""Part-based manipulation trajectory transfer.

Given a segmented object-part point-cloud and a natural-language
instruction, rank a library of previously collected manipulation
trajectories and return the best transferable one. Includes the
trajectory data model, the part-frame alignment that makes transfers
pose-invariant, a dynamic-time-warping trajectory distance, crowd-label
noise handling, the three-modality ranking network with autoencoder
pretraining, a cross-validated evaluation harness, dataset tooling with
a synthetic generator, and an HTTP service for collecting
demonstrations.
"""

from .dtw import DtwParams, DtwResult, average_distance, dtw_mt, waypoint_cost
from .features import (
    BagOfWords,
    FeatureConfig,
    FeatureVector,
    Featurizer,
    OccupancyGrid,
    Vocabulary,
    build_vocabulary,
    embed_language,
    embed_trajectory,
    voxelize,
)
from .labels import (
    LabeledExample,
    NoiseThresholds,
    TaskInstance,
    generate_examples,
    select_best_demo,
)
from .net import MultimodalNet, NetConfig, Score, finetune, forward, infer, pretrain
from .partframe import (
    PartFrame,
    PointCloudPart,
    compute_part_frame,
    from_part_frame,
    to_part_frame,
)
from .quat import slerp
from .trajectory import (
    GripperState,
    Trajectory,
    TrajectorySource,
    Waypoint,
    interpolate,
    normalize_length,
)

__version__ = "0.1.0"

__all__ = [
    "DtwParams",
    "DtwResult",
    "average_distance",
    "dtw_mt",
    "waypoint_cost",
    "BagOfWords",
    "FeatureConfig",
    "FeatureVector",
    "Featurizer",
    "OccupancyGrid",
    "Vocabulary",
    "build_vocabulary",
    "embed_language",
    "embed_trajectory",
    "voxelize",
    "LabeledExample",
    "NoiseThresholds",
    "TaskInstance",
    "generate_examples",
    "select_best_demo",
    "MultimodalNet",
    "NetConfig",
    "Score",
    "finetune",
    "forward",
    "infer",
    "pretrain",
    "PartFrame",
    "PointCloudPart",
    "compute_part_frame",
    "from_part_frame",
    "to_part_frame",
    "slerp",
    "GripperState",
    "Trajectory",
    "TrajectorySource",
    "Waypoint",
    "interpolate",
    "normalize_length",
    "__version__",
]
