"""Pydantic request/response models for the HTTP evaluation service.

These mirror the line-delimited interchange formats one-to-one, so a client
can post the same records it would otherwise write to disk. Conversion
helpers translate between wire models and the core domain types.
"""

from __future__ import annotations

from typing import Annotated, Literal

from pydantic import BaseModel, Field, model_validator

from ..datastats import DatasetStats
from ..metrics import EvalReport
from ..synth import BucketStat, GenerationLedger, SynthConfig
from ..types import (
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
)

Box4 = Annotated[list[float], Field(min_length=4, max_length=4)]
Point2 = Annotated[list[float], Field(min_length=2, max_length=2)]
SubsetName = Literal[
    "attribute", "position", "interaction", "reasoning", "celebrity", "rejection"
]
DensityNumerator = Literal["image-persons", "referring-gt"]


class RleMaskModel(BaseModel):
    size: tuple[int, int] = Field(description="[height, width] in pixels")
    counts: list[int]


class PersonModel(BaseModel):
    box: Box4
    mask: RleMaskModel | None = None


class ReferringModel(BaseModel):
    id: str
    text: str
    subset: SubsetName
    gt_indices: list[int] = []


class ImageModel(BaseModel):
    image_id: str
    width: int
    height: int
    persons: list[PersonModel] = []
    referrings: list[ReferringModel] = []


class PredictionModel(BaseModel):
    """One prediction record: exactly one payload field is set."""

    referring_id: str
    boxes: list[Box4] | None = None
    points: list[Point2] | None = None
    rejection: bool | None = None
    raw: str | None = None

    @model_validator(mode="after")
    def _exactly_one_payload(self) -> PredictionModel:
        present = [
            name
            for name in ("boxes", "points", "rejection", "raw")
            if getattr(self, name) is not None
        ]
        if len(present) != 1:
            raise ValueError(f"exactly one payload field required, found {present or 'none'}")
        if self.rejection is False:
            raise ValueError("rejection must be true when present")
        return self


class ViolationModel(BaseModel):
    code: str
    image_id: str
    referring_id: str | None = None
    detail: str = ""


class SubsetScoresModel(BaseModel):
    recall: float
    precision: float
    density_f1: float
    n_referrings: int


class AverageScoresModel(BaseModel):
    recall: float
    precision: float
    density_f1: float


class ReportModel(BaseModel):
    per_subset: dict[str, SubsetScoresModel]
    average: AverageScoresModel | None
    rejection_score: float | None
    n_rejection_referrings: int
    n_missing_predictions: int


class EvaluateRequest(BaseModel):
    dataset: list[ImageModel]
    predictions: list[PredictionModel]
    point_eval: bool = False
    density_numerator: DensityNumerator = "image-persons"
    subset: SubsetName | None = None


class EvaluateResponse(BaseModel):
    report: ReportModel
    table: str


class DatasetRequest(BaseModel):
    dataset: list[ImageModel]


class ValidateResponse(BaseModel):
    valid: bool
    violations: list[ViolationModel]


class SubsetStatsModel(BaseModel):
    n_referrings: int
    avg_boxes_per_ref: float
    avg_words_per_ref: float


class StatsResponse(BaseModel):
    n_images: int
    n_referrings: int
    vocab_size: int
    avg_words_per_ref: float | None
    avg_boxes_per_ref: float | None
    avg_persons_per_image: float | None
    avg_image_size: tuple[float, float] | None
    persons_per_image_hist: dict[int, int]
    boxes_per_ref_hist: dict[int, int]
    per_subset: dict[str, SubsetStatsModel]


class SynthRequest(BaseModel):
    seed: int = 0
    n_images: int = 10
    persons_per_image: tuple[int, int] = (4, 8)
    gts_per_ref: tuple[int, int] = (1, 3)
    refs_per_image: tuple[int, int] = (1, 3)
    image_size: tuple[int, int] = (640, 480)
    jitter: float = 0.0
    rejection_fraction: float = 0.0

    def to_config(self) -> SynthConfig:
        return SynthConfig(
            seed=self.seed,
            n_images=self.n_images,
            persons_per_image=self.persons_per_image,
            gts_per_ref=self.gts_per_ref,
            refs_per_image=self.refs_per_image,
            image_size=self.image_size,
            jitter=self.jitter,
            rejection_fraction=self.rejection_fraction,
        )


class LedgerModel(BaseModel):
    seed: int
    n_images: int
    n_referrings: int
    n_rejection_referrings: int
    per_subset_referrings: dict[str, int]
    persons_total: int
    gt_boxes_total: int
    words_total: int
    vocab_size: int
    persons_per_image_hist: dict[int, int]
    boxes_per_ref_hist: dict[int, int]


class SynthResponse(BaseModel):
    dataset: list[ImageModel]
    ledger: LedgerModel


class BaselineRequest(BaseModel):
    kind: str = Field(description="all_persons | oracle | top_k:K | empty | jittered_oracle:J")
    dataset: list[ImageModel]
    seed: int = 0


class BaselineResponse(BaseModel):
    predictions: list[PredictionModel]


class Figure6Request(BaseModel):
    dataset: list[ImageModel]
    predictions: list[PredictionModel]
    density_numerator: DensityNumerator = "image-persons"


class BucketModel(BaseModel):
    n_referrings: int
    recall: float
    precision: float


class Figure6Response(BaseModel):
    buckets: dict[int, BucketModel]


def image_from_model(model: ImageModel) -> ImageRecord:
    """Wire model -> domain record, with the same ingest clamping as file I/O."""
    persons = []
    for p in model.persons:
        box = Box(*p.box)
        if model.width > 0 and model.height > 0 and box.is_valid():
            box = box.clamp(model.width, model.height)
        mask = (
            RleMask(height=p.mask.size[0], width=p.mask.size[1], counts=tuple(p.mask.counts))
            if p.mask is not None
            else None
        )
        persons.append(PersonRecord(box=box, mask=mask))
    referrings = tuple(
        ReferringRecord(
            id=r.id, text=r.text, subset=Subset(r.subset), gt_indices=tuple(r.gt_indices)
        )
        for r in model.referrings
    )
    return ImageRecord(
        image_id=model.image_id,
        width=model.width,
        height=model.height,
        persons=tuple(persons),
        referrings=referrings,
    )


def image_to_model(image: ImageRecord) -> ImageModel:
    return ImageModel(
        image_id=image.image_id,
        width=image.width,
        height=image.height,
        persons=[
            PersonModel(
                box=[p.box.x0, p.box.y0, p.box.x1, p.box.y1],
                mask=(
                    RleMaskModel(size=(p.mask.height, p.mask.width), counts=list(p.mask.counts))
                    if p.mask is not None
                    else None
                ),
            )
            for p in image.persons
        ],
        referrings=[
            ReferringModel(
                id=r.id, text=r.text, subset=r.subset.value, gt_indices=list(r.gt_indices)
            )
            for r in image.referrings
        ],
    )


def predictions_from_models(
    models: list[PredictionModel], dataset: list[ImageRecord]
) -> list[PredictionSet]:
    """Wire predictions -> normalized PredictionSets, resolving raw records
    against each referring's per-image person boxes."""
    from ..adapters import parse_retrieval_output, resolve_indices
    from ..types import normalize_prediction

    boxes_by_ref: dict[str, list[Box]] = {}
    for image in dataset:
        input_boxes = [p.box for p in image.persons]
        for ref in image.referrings:
            boxes_by_ref[ref.id] = input_boxes
    out = []
    for m in models:
        if m.raw is not None:
            if m.referring_id not in boxes_by_ref:
                raise EvalError(
                    "UNKNOWN_REFERRING_ID",
                    f"raw record references unknown referring {m.referring_id!r}",
                )
            pred = resolve_indices(
                parse_retrieval_output(m.raw), boxes_by_ref[m.referring_id], m.referring_id
            )
        elif m.boxes is not None:
            pred = PredictionSet.of_boxes(m.referring_id, (Box(*b) for b in m.boxes))
        elif m.points is not None:
            pred = PredictionSet.of_points(m.referring_id, (Point(*p) for p in m.points))
        else:
            pred = PredictionSet.rejection(m.referring_id)
        out.append(normalize_prediction(pred))
    return out


def prediction_to_model(pred: PredictionSet) -> PredictionModel:
    if pred.boxes:
        return PredictionModel(
            referring_id=pred.referring_id,
            boxes=[[b.x0, b.y0, b.x1, b.y1] for b in pred.boxes],
        )
    if pred.points:
        return PredictionModel(
            referring_id=pred.referring_id, points=[[p.x, p.y] for p in pred.points]
        )
    return PredictionModel(referring_id=pred.referring_id, rejection=True)


def violation_to_model(v: Violation) -> ViolationModel:
    return ViolationModel(
        code=v.code, image_id=v.image_id, referring_id=v.referring_id, detail=v.detail
    )


def report_to_model(report: EvalReport) -> ReportModel:
    return ReportModel(
        per_subset={
            s.subset.value: SubsetScoresModel(
                recall=s.recall,
                precision=s.precision,
                density_f1=s.density_f1,
                n_referrings=s.n_referrings,
            )
            for s in report.per_subset
        },
        average=(
            AverageScoresModel(
                recall=report.avg_recall,
                precision=report.avg_precision,
                density_f1=report.avg_density_f1,
            )
            if report.avg_recall is not None
            else None
        ),
        rejection_score=report.rejection_score,
        n_rejection_referrings=report.n_rejection_referrings,
        n_missing_predictions=report.n_missing_predictions,
    )


def stats_to_model(stats: DatasetStats) -> StatsResponse:
    return StatsResponse(
        n_images=stats.n_images,
        n_referrings=stats.n_referrings,
        vocab_size=stats.vocab_size,
        avg_words_per_ref=stats.avg_words_per_ref,
        avg_boxes_per_ref=stats.avg_boxes_per_ref,
        avg_persons_per_image=stats.avg_persons_per_image,
        avg_image_size=stats.avg_image_size,
        persons_per_image_hist=stats.persons_per_image_hist,
        boxes_per_ref_hist=stats.boxes_per_ref_hist,
        per_subset={
            s.subset.value: SubsetStatsModel(
                n_referrings=s.n_referrings,
                avg_boxes_per_ref=s.avg_boxes_per_ref,
                avg_words_per_ref=s.avg_words_per_ref,
            )
            for s in stats.per_subset
        },
    )


def ledger_to_model(ledger: GenerationLedger) -> LedgerModel:
    return LedgerModel(
        seed=ledger.seed,
        n_images=ledger.n_images,
        n_referrings=ledger.n_referrings,
        n_rejection_referrings=ledger.n_rejection_referrings,
        per_subset_referrings=ledger.per_subset_referrings,
        persons_total=ledger.persons_total,
        gt_boxes_total=ledger.gt_boxes_total,
        words_total=ledger.words_total,
        vocab_size=ledger.vocab_size,
        persons_per_image_hist=ledger.persons_per_image_hist,
        boxes_per_ref_hist=ledger.boxes_per_ref_hist,
    )


def buckets_to_model(buckets: dict[int, BucketStat]) -> Figure6Response:
    return Figure6Response(
        buckets={
            k: BucketModel(n_referrings=b.n_referrings, recall=b.recall, precision=b.precision)
            for k, b in buckets.items()
        }
    )
