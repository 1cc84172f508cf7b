"""Recall, precision, DensityF1, point-in-mask scoring, and rejection scoring.

Per-referring box scores are averaged over the ten IoU thresholds
0.50, 0.55, ..., 0.95 (the COCO ladder); "exceeds the threshold" is
implemented as >= so an exact-match IoU of 1.0 still counts at 0.95.
DensityF1 multiplies the per-referring F1 by the density penalty
min(1, persons_in_image / predicted_count), which punishes predicting every
person in the image to farm recall. Aggregation is macro: thresholds are
averaged within a referring, referrings within a subset, and subsets
(unweighted) into the overall average.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import matching
from .geometry import iou_matrix, rle_decode
from .types import (
    SCORED_SUBSETS,
    Box,
    EvalError,
    ImageRecord,
    Point,
    PredictionSet,
    ReferringRecord,
    RleMask,
    Subset,
    normalize_prediction,
)

logger = logging.getLogger(__name__)

#: The ten evaluation thresholds, written as literals so that comparisons
#: against exactly-representable IoU values behave predictably.
THRESHOLDS = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

#: Density penalty numerator choices: the paper's stated text (all persons in
#: the image) and the alternative its symbol name suggests (the referring's
#: own ground-truth count).
DENSITY_NUMERATORS = ("image-persons", "referring-gt")


@dataclass(frozen=True)
class PRTriple:
    """Threshold-averaged per-referring recall, precision, and DensityF1."""

    recall: float
    precision: float
    density_f1: float

    def __post_init__(self) -> None:
        for name, v in (
            ("recall", self.recall),
            ("precision", self.precision),
            ("density_f1", self.density_f1),
        ):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")


@dataclass(frozen=True)
class SubsetReport:
    """Mean scores for one subset, as percentages."""

    subset: Subset
    recall: float
    precision: float
    density_f1: float
    n_referrings: int


@dataclass(frozen=True)
class EvalReport:
    """Benchmark-table-shaped result: per-subset scores, unweighted average,
    and the rejection score (all percentages, full precision)."""

    per_subset: tuple[SubsetReport, ...]
    avg_recall: float | None
    avg_precision: float | None
    avg_density_f1: float | None
    rejection_score: float | None
    n_rejection_referrings: int
    n_missing_predictions: int


def density_penalty(persons_in_image: int, predicted_count: int) -> float:
    """min(1, persons_in_image / predicted_count); never evaluated at 0 predictions."""
    if predicted_count == 0:
        raise EvalError("ZERO_PREDICTIONS", "density penalty is undefined for 0 predictions")
    if predicted_count < 0 or persons_in_image < 0:
        raise ValueError("counts must be non-negative")
    return min(1.0, persons_in_image / predicted_count)


def f1_score(recall: float, precision: float) -> float:
    """Harmonic-mean F1, defined as 0 when both inputs are 0."""
    if recall + precision == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def referring_pr_at_threshold(
    preds: list[Box], gts: list[Box], t: float
) -> tuple[float, float]:
    """(recall, precision) for one referring at one IoU threshold.

    recall = matches / |gts|, precision = matches / |preds|; an empty
    prediction list scores (0, 0) rather than being excused.
    """
    if not gts:
        raise EvalError("EMPTY_GT", "box metrics need at least one ground truth")
    if not preds:
        return 0.0, 0.0
    matched = matching.match_at_threshold(iou_matrix(preds, gts), t).cardinality
    return matched / len(gts), matched / len(preds)


def _cardinalities_per_threshold(m: np.ndarray) -> list[int]:
    """Maximum matching cardinality at each threshold.

    Thresholds whose edge sets coincide share one matching computation: since
    the edge set {(i,j) : m >= t} only shrinks as t grows, an equal edge
    count at two thresholds implies an equal edge set.
    """
    flat = np.asarray(m, dtype=float).ravel()
    by_count: dict[int, int] = {}
    out = []
    for t in THRESHOLDS:
        count = int((flat >= t).sum())
        if count not in by_count:
            by_count[count] = (
                0 if count == 0 else matching.match_at_threshold(m, t).cardinality
            )
        out.append(by_count[count])
    return out


def _resolve_numerator(
    density_numerator: str, persons_in_image: int, gt_count: int
) -> int:
    if density_numerator not in DENSITY_NUMERATORS:
        raise ValueError(
            f"density_numerator must be one of {DENSITY_NUMERATORS}, got {density_numerator!r}"
        )
    return persons_in_image if density_numerator == "image-persons" else gt_count


def referring_metrics(
    preds: list[Box],
    gts: list[Box],
    persons_in_image: int,
    *,
    density_numerator: str = "image-persons",
) -> PRTriple:
    """Threshold-averaged recall/precision/DensityF1 for one referring.

    The density penalty is threshold-independent and computed once; per
    threshold, F1 is the harmonic mean of that threshold's (R, P) and
    DensityF1 is F1 times the penalty.
    """
    if not gts:
        raise EvalError("EMPTY_GT", "box metrics need at least one ground truth")
    if not preds:
        return PRTriple(0.0, 0.0, 0.0)
    numerator = _resolve_numerator(density_numerator, persons_in_image, len(gts))
    d = density_penalty(numerator, len(preds))
    cardinalities = _cardinalities_per_threshold(iou_matrix(preds, gts))
    recalls = [c / len(gts) for c in cardinalities]
    precisions = [c / len(preds) for c in cardinalities]
    df1s = [f1_score(r, p) * d for r, p in zip(recalls, precisions)]
    n = len(THRESHOLDS)
    return PRTriple(
        recall=math.fsum(recalls) / n,
        precision=math.fsum(precisions) / n,
        density_f1=math.fsum(df1s) / n,
    )


def point_referring_metrics(
    points: list[Point],
    gt_masks: list[RleMask],
    persons_in_image: int,
    *,
    density_numerator: str = "image-persons",
) -> PRTriple:
    """Point-protocol scores: a point redeems a mask it falls inside.

    Containment is binary, so there is no threshold ladder; matching is the
    same one-to-one maximum matching, and DensityF1 applies the same penalty.
    """
    if not gt_masks:
        raise EvalError("EMPTY_GT", "point metrics need at least one ground-truth mask")
    dims = {(m.height, m.width) for m in gt_masks}
    if len(dims) > 1:
        raise EvalError("DIMENSION_MISMATCH", f"masks disagree on image size: {sorted(dims)}")
    if not points:
        return PRTriple(0.0, 0.0, 0.0)
    bitmaps = [rle_decode(m) for m in gt_masks]
    height, width = bitmaps[0].shape
    adjacency = np.zeros((len(points), len(gt_masks)))
    for i, p in enumerate(points):
        col, row = math.floor(p.x), math.floor(p.y)
        if not (0 <= col < width and 0 <= row < height):
            continue
        for j, bitmap in enumerate(bitmaps):
            if bitmap[row, col]:
                adjacency[i, j] = 1.0
    matched = matching.match_at_threshold(adjacency, 0.5).cardinality
    recall = matched / len(gt_masks)
    precision = matched / len(points)
    numerator = _resolve_numerator(density_numerator, persons_in_image, len(gt_masks))
    d = density_penalty(numerator, len(points))
    return PRTriple(recall=recall, precision=precision, density_f1=f1_score(recall, precision) * d)


def rejection_score(predictions: list[PredictionSet]) -> float:
    """Percentage of rejection-subset referrings the model correctly left empty."""
    if not predictions:
        raise EvalError("EMPTY_INPUT", "rejection score needs at least one prediction")
    rejected = sum(1 for p in predictions if p.is_rejection)
    return 100.0 * rejected / len(predictions)


def evaluate_referring(
    image: ImageRecord,
    ref: ReferringRecord,
    prediction: PredictionSet | None,
    *,
    density_numerator: str = "image-persons",
) -> PRTriple:
    """Score one non-rejection referring, routing by the prediction payload."""
    if prediction is None or prediction.is_rejection:
        return PRTriple(0.0, 0.0, 0.0)
    gts = [image.persons[i] for i in ref.gt_indices]
    if prediction.points is not None:
        masks = [g.mask for g in gts]
        if any(m is None for m in masks):
            raise EvalError(
                "MISSING_MASK",
                f"referring {ref.id!r} has point predictions but ground truths without masks",
            )
        return point_referring_metrics(
            list(prediction.points),
            masks,
            len(image.persons),
            density_numerator=density_numerator,
        )
    return referring_metrics(
        list(prediction.boxes or ()),
        [g.box for g in gts],
        len(image.persons),
        density_numerator=density_numerator,
    )


def aggregate(
    dataset: list[ImageRecord],
    predictions: list[PredictionSet],
    *,
    density_numerator: str = "image-persons",
    subsets: set[Subset] | None = None,
    workers: int = 1,
) -> EvalReport:
    """Evaluate a prediction set over a dataset into a benchmark-shaped report.

    Missing predictions are scored as rejections (with a warning); predictions
    for unknown referring ids are an error. Per-referring work is independent,
    so it may fan out over ``workers`` threads; results are reduced in dataset
    order, making the report identical for any worker count.
    """
    known: dict[str, tuple[ImageRecord, ReferringRecord]] = {}
    for image in dataset:
        for ref in image.referrings:
            known[ref.id] = (image, ref)
    by_id: dict[str, PredictionSet] = {}
    for raw in predictions:
        if raw.referring_id not in known:
            raise EvalError(
                "UNKNOWN_REFERRING_ID",
                f"prediction references unknown referring {raw.referring_id!r}",
            )
        if raw.referring_id in by_id:
            logger.warning("duplicate prediction for %r; keeping the last", raw.referring_id)
        by_id[raw.referring_id] = normalize_prediction(raw)

    n_missing = 0
    tasks: list[tuple[ImageRecord, ReferringRecord, PredictionSet | None]] = []
    rejection_preds: list[PredictionSet] = []
    for image in dataset:
        for ref in image.referrings:
            if subsets is not None and ref.subset not in subsets:
                continue
            pred = by_id.get(ref.id)
            if pred is None:
                n_missing += 1
                logger.warning("no prediction for referring %r; scored as rejection", ref.id)
                pred = PredictionSet.rejection(ref.id)
            if ref.subset is Subset.REJECTION:
                rejection_preds.append(pred)
            else:
                tasks.append((image, ref, pred))

    def score(task: tuple[ImageRecord, ReferringRecord, PredictionSet | None]) -> PRTriple:
        image, ref, pred = task
        return evaluate_referring(image, ref, pred, density_numerator=density_numerator)

    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            triples = list(pool.map(score, tasks))
    else:
        triples = [score(t) for t in tasks]

    per_subset_triples: dict[Subset, list[PRTriple]] = {}
    for (image, ref, _), triple in zip(tasks, triples):
        per_subset_triples.setdefault(ref.subset, []).append(triple)

    subset_reports = []
    for subset in SCORED_SUBSETS:
        if subset not in per_subset_triples:
            continue
        group = per_subset_triples[subset]
        n = len(group)
        subset_reports.append(
            SubsetReport(
                subset=subset,
                recall=100.0 * math.fsum(t.recall for t in group) / n,
                precision=100.0 * math.fsum(t.precision for t in group) / n,
                density_f1=100.0 * math.fsum(t.density_f1 for t in group) / n,
                n_referrings=n,
            )
        )

    if subset_reports:
        k = len(subset_reports)
        avg_r = math.fsum(s.recall for s in subset_reports) / k
        avg_p = math.fsum(s.precision for s in subset_reports) / k
        avg_d = math.fsum(s.density_f1 for s in subset_reports) / k
    else:
        avg_r = avg_p = avg_d = None

    return EvalReport(
        per_subset=tuple(subset_reports),
        avg_recall=avg_r,
        avg_precision=avg_p,
        avg_density_f1=avg_d,
        rejection_score=rejection_score(rejection_preds) if rejection_preds else None,
        n_rejection_referrings=len(rejection_preds),
        n_missing_predictions=n_missing,
    )
