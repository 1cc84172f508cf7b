"""Line-delimited interchange formats and report serialization.

Dataset and prediction files carry one JSON object per line so arbitrarily
large benchmarks stream through without full materialization. Person boxes
that overshoot the image bounds are clamped at ingest with a warning rather
than rejected, since detector-derived ground truth frequently overshoots by
subpixels.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Iterator

from .adapters import parse_box_predictions
from .datastats import DatasetStats
from .metrics import EvalReport
from .synth import BucketStat, GenerationLedger
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
)

logger = logging.getLogger(__name__)


def _schema_error(line_no: int, detail: str) -> EvalError:
    return EvalError("SCHEMA_ERROR", f"line {line_no}: {detail}")


def _require(record: dict, key: str, kind, line_no: int):
    value = record.get(key)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise _schema_error(line_no, f"missing or mistyped field {key!r}")
    return value


def _parse_box(values, line_no: int) -> Box:
    if (
        not isinstance(values, list)
        or len(values) != 4
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values)
    ):
        raise _schema_error(line_no, f"box must be [x0, y0, x1, y1], got {values!r}")
    return Box(*(float(v) for v in values))


def _parse_mask(obj, line_no: int) -> RleMask:
    if not isinstance(obj, dict) or set(obj) != {"size", "counts"}:
        raise _schema_error(line_no, "mask must be an object with 'size' and 'counts'")
    size = obj["size"]
    if (
        not isinstance(size, list)
        or len(size) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in size)
    ):
        raise _schema_error(line_no, "mask size must be [height, width]")
    counts = obj["counts"]
    if not isinstance(counts, list) or any(
        isinstance(c, bool) or not isinstance(c, int) for c in counts
    ):
        raise _schema_error(line_no, "mask counts must be a list of integers")
    return RleMask(height=size[0], width=size[1], counts=tuple(counts))


def parse_dataset_lines(lines: Iterable[str]) -> Iterator[ImageRecord]:
    """Parse dataset records one line at a time, clamping overshooting boxes."""
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise _schema_error(line_no, f"invalid JSON ({e.msg})") from e
        if not isinstance(record, dict):
            raise _schema_error(line_no, "record must be a JSON object")
        image_id = _require(record, "image_id", str, line_no)
        width = _require(record, "width", int, line_no)
        height = _require(record, "height", int, line_no)

        persons = []
        raw_persons = record.get("persons", [])
        if not isinstance(raw_persons, list):
            raise _schema_error(line_no, "persons must be a list")
        for p in raw_persons:
            if not isinstance(p, dict) or "box" not in p:
                raise _schema_error(line_no, "each person needs a 'box'")
            box = _parse_box(p["box"], line_no)
            if width > 0 and height > 0 and box.is_valid():
                clamped = box.clamp(width, height)
                if clamped != box:
                    logger.warning(
                        "image %s: clamped person box %s to image bounds", image_id, box
                    )
                    box = clamped
            mask = _parse_mask(p["mask"], line_no) if p.get("mask") is not None else None
            persons.append(PersonRecord(box=box, mask=mask))

        referrings = []
        raw_refs = record.get("referrings", [])
        if not isinstance(raw_refs, list):
            raise _schema_error(line_no, "referrings must be a list")
        for r in raw_refs:
            if not isinstance(r, dict):
                raise _schema_error(line_no, "each referring must be an object")
            subset_name = _require(r, "subset", str, line_no)
            try:
                subset = Subset(subset_name)
            except ValueError:
                raise _schema_error(line_no, f"unknown subset {subset_name!r}") from None
            gt = r.get("gt_indices", [])
            if not isinstance(gt, list) or any(
                isinstance(g, bool) or not isinstance(g, int) for g in gt
            ):
                raise _schema_error(line_no, "gt_indices must be a list of integers")
            referrings.append(
                ReferringRecord(
                    id=_require(r, "id", str, line_no),
                    text=_require(r, "text", str, line_no),
                    subset=subset,
                    gt_indices=tuple(gt),
                )
            )
        yield ImageRecord(
            image_id=image_id,
            width=width,
            height=height,
            persons=tuple(persons),
            referrings=tuple(referrings),
        )


def read_dataset(path: str | Path) -> list[ImageRecord]:
    with open(path, encoding="utf-8") as fh:
        return list(parse_dataset_lines(fh))


def image_to_dict(image: ImageRecord) -> dict:
    return {
        "image_id": image.image_id,
        "width": image.width,
        "height": image.height,
        "persons": [
            {
                "box": [p.box.x0, p.box.y0, p.box.x1, p.box.y1],
                **(
                    {"mask": {"size": [p.mask.height, p.mask.width], "counts": list(p.mask.counts)}}
                    if p.mask is not None
                    else {}
                ),
            }
            for p in image.persons
        ],
        "referrings": [
            {
                "id": r.id,
                "text": r.text,
                "subset": r.subset.value,
                "gt_indices": list(r.gt_indices),
            }
            for r in image.referrings
        ],
    }


def write_dataset(dataset: Iterable[ImageRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image in dataset:
            fh.write(json.dumps(image_to_dict(image)) + "\n")


def prediction_to_dict(pred: PredictionSet) -> dict:
    if pred.boxes is not None and pred.boxes:
        return {
            "referring_id": pred.referring_id,
            "boxes": [[b.x0, b.y0, b.x1, b.y1] for b in pred.boxes],
        }
    if pred.points is not None and pred.points:
        return {
            "referring_id": pred.referring_id,
            "points": [[p.x, p.y] for p in pred.points],
        }
    return {"referring_id": pred.referring_id, "rejection": True}


def write_predictions(predictions: Iterable[PredictionSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            fh.write(json.dumps(prediction_to_dict(pred)) + "\n")


def read_predictions(
    path: str | Path, dataset: list[ImageRecord] | None = None
) -> list[PredictionSet]:
    """Read a prediction file; a dataset enables raw retrieval records,
    resolved against each referring's per-image person boxes."""
    boxes_by_ref: dict[str, list[Box]] | None = None
    if dataset is not None:
        boxes_by_ref = {}
        for image in dataset:
            input_boxes = [p.box for p in image.persons]
            for ref in image.referrings:
                boxes_by_ref[ref.id] = input_boxes
    with open(path, encoding="utf-8") as fh:
        return parse_box_predictions(fh, input_boxes_by_referring=boxes_by_ref)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "per_subset": {
            s.subset.value: {
                "recall": s.recall,
                "precision": s.precision,
                "density_f1": s.density_f1,
                "n_referrings": s.n_referrings,
            }
            for s in report.per_subset
        },
        "average": (
            None
            if report.avg_recall is None
            else {
                "recall": report.avg_recall,
                "precision": report.avg_precision,
                "density_f1": report.avg_density_f1,
            }
        ),
        "rejection_score": report.rejection_score,
        "n_rejection_referrings": report.n_rejection_referrings,
        "n_missing_predictions": report.n_missing_predictions,
    }


def stats_to_dict(stats: DatasetStats) -> dict:
    return {
        "n_images": stats.n_images,
        "n_referrings": stats.n_referrings,
        "vocab_size": stats.vocab_size,
        "avg_words_per_ref": stats.avg_words_per_ref,
        "avg_boxes_per_ref": stats.avg_boxes_per_ref,
        "avg_persons_per_image": stats.avg_persons_per_image,
        "avg_image_size": list(stats.avg_image_size) if stats.avg_image_size else None,
        "persons_per_image_hist": {str(k): v for k, v in stats.persons_per_image_hist.items()},
        "boxes_per_ref_hist": {str(k): v for k, v in stats.boxes_per_ref_hist.items()},
        "per_subset": {
            s.subset.value: {
                "n_referrings": s.n_referrings,
                "avg_boxes_per_ref": s.avg_boxes_per_ref,
                "avg_words_per_ref": s.avg_words_per_ref,
            }
            for s in stats.per_subset
        },
    }


def ledger_to_dict(ledger: GenerationLedger) -> dict:
    return asdict(ledger)


def write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_histogram_csv(hist: dict[int, int], path: str | Path, value_label: str) -> None:
    """Two-column delimiter-separated export for external plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{value_label},frequency\n")
        for value, freq in sorted(hist.items()):
            fh.write(f"{value},{freq}\n")


def write_buckets_csv(buckets: dict[int, BucketStat], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gt_count,n_referrings,recall,precision\n")
        for count, stat in sorted(buckets.items()):
            fh.write(f"{count},{stat.n_referrings},{stat.recall!r},{stat.precision!r}\n")
