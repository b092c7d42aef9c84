"""Person tube proposals for sentence-driven video grounding.

The pipeline: parse attribute triples from the query sentence, split the
video into scene clips, track people into tube proposals, clean the tubes,
then match and evaluate against ground truth with the vIoU metric.  A loss
oracle scores model outputs against the matching labels.
"""

from .boxes import BoundingBox, Detection, iou, nms
from .config import PipelineConfig, load_config
from .errors import (
    ConfigError,
    ConfigVersionError,
    EmptyInputError,
    MalformedInputError,
    NumericalDegeneracyError,
    SchemaError,
    TubegroundError,
)
from .fixtures import FixtureSpec, NoiseSpec, PersonSpec, make_fixture
from .grounding import (
    EvaluationReport,
    FrameTargets,
    GroundTruth,
    MatchLabel,
    MatchLabelValue,
    MatchScores,
    evaluate_dataset,
    frame_targets,
    label,
    match_scores,
    viou,
)
from .losses import (
    LabelPack,
    LossBreakdown,
    LossWeights,
    ScorePack,
    baseline_variant_loss,
    bce,
    focal_loss,
    iou_reg_loss,
    total_loss,
)
from .postprocess import PostprocessConfig, clean_clip_tubes, filter_candidates
from .scene_split import Clip, FrameHistogram, content_delta, detect_scenes
from .text_attributes import (
    AttributeTriple,
    ClothingColor,
    ClothingType,
    Gender,
    SentenceAttributes,
    extract_attributes,
)
from .tracker import TrackerConfig, Tube, track_clip

__version__ = "0.1.0"

__all__ = [
    "AttributeTriple",
    "BoundingBox",
    "Clip",
    "ClothingColor",
    "ClothingType",
    "ConfigError",
    "ConfigVersionError",
    "Detection",
    "EmptyInputError",
    "EvaluationReport",
    "FixtureSpec",
    "FrameHistogram",
    "FrameTargets",
    "Gender",
    "GroundTruth",
    "LabelPack",
    "LossBreakdown",
    "LossWeights",
    "MalformedInputError",
    "MatchLabel",
    "MatchLabelValue",
    "MatchScores",
    "NoiseSpec",
    "NumericalDegeneracyError",
    "PersonSpec",
    "PipelineConfig",
    "PostprocessConfig",
    "SchemaError",
    "ScorePack",
    "SentenceAttributes",
    "TrackerConfig",
    "Tube",
    "TubegroundError",
    "baseline_variant_loss",
    "bce",
    "clean_clip_tubes",
    "content_delta",
    "detect_scenes",
    "evaluate_dataset",
    "extract_attributes",
    "filter_candidates",
    "focal_loss",
    "frame_targets",
    "iou",
    "iou_reg_loss",
    "label",
    "load_config",
    "make_fixture",
    "match_scores",
    "nms",
    "total_loss",
    "track_clip",
    "viou",
]
