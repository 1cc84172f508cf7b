"""Evaluation toolkit for multi-instance referring-expression detection.

Core protocol: one-to-one IoU matching averaged over thresholds 0.50-0.95,
DensityF1 with the min(1, persons/predictions) density penalty, point-in-mask
scoring for point-output models, and rejection scoring for referrings that
match nobody. Ships with interchange formats, prediction parsers, dataset
statistics, baselines, and a seeded synthetic benchmark generator.
"""

from .adapters import RetrievalOutput, parse_box_predictions, parse_retrieval_output, resolve_indices
from .datastats import DatasetStats, compute_stats, tokenize
from .geometry import box_iou, iou_matrix, link_face_to_person, point_in_mask, rle_decode, rle_encode
from .matching import MatchResult, brute_force_match, match_at_threshold
from .metrics import (
    THRESHOLDS,
    EvalReport,
    PRTriple,
    SubsetReport,
    aggregate,
    density_penalty,
    point_referring_metrics,
    referring_metrics,
    referring_pr_at_threshold,
    rejection_score,
)
from .synth import (
    BaselineKind,
    GenerationLedger,
    SynthConfig,
    generate,
    recall_by_instance_count,
    run_baseline,
)
from .types import (
    Box,
    EvalError,
    ImageRecord,
    PersonRecord,
    Point,
    PredictionSet,
    ReferringRecord,
    RleMask,
    Subset,
    Violation,
    normalize_prediction,
    validate_dataset,
)

__version__ = "0.1.0"
