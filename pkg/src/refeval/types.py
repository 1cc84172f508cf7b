"""Shared domain types for referring-expression detection evaluation.

Everything here is an immutable value object: boxes and points in absolute
pixel coordinates (corner form), run-length-encoded instance masks, dataset
records, and model prediction payloads. Construction never validates cross
record invariants; :func:`validate_dataset` reports those as data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class EvalError(Exception):
    """Raised for unrecoverable input problems.

    Carries a stable machine-readable ``code`` so callers (CLI, service) can
    map failures without parsing messages.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class Subset(enum.Enum):
    """The six referring categories a record can belong to."""

    ATTRIBUTE = "attribute"
    POSITION = "position"
    INTERACTION = "interaction"
    REASONING = "reasoning"
    CELEBRITY = "celebrity"
    REJECTION = "rejection"


#: Non-rejection subsets in canonical reporting order.
SCORED_SUBSETS = (
    Subset.ATTRIBUTE,
    Subset.POSITION,
    Subset.INTERACTION,
    Subset.REASONING,
    Subset.CELEBRITY,
)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in absolute pixel coordinates, corner form.

    Corner form (x0, y0, x1, y1) with x0 <= x1 and y0 <= y1 is the single
    canonical representation; zero-area boxes are legal inputs that score
    IoU 0 against everything.
    """

    x0: float
    y0: float
    x1: float
    y1: float

    def area(self) -> float:
        return max(0.0, self.x1 - self.x0) * max(0.0, self.y1 - self.y0)

    def is_valid(self) -> bool:
        """True iff all coordinates are finite and corners are ordered."""
        coords = (self.x0, self.y0, self.x1, self.y1)
        return all(math.isfinite(c) for c in coords) and self.x0 <= self.x1 and self.y0 <= self.y1

    def clamp(self, width: float, height: float) -> Box:
        """Clip the box to [0, width] x [0, height]."""
        return Box(
            min(max(self.x0, 0.0), width),
            min(max(self.y0, 0.0), height),
            min(max(self.x1, 0.0), width),
            min(max(self.y1, 0.0), height),
        )


@dataclass(frozen=True)
class Point:
    """A single pixel-space coordinate."""

    x: float
    y: float

    def is_valid(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class RleMask:
    """Run-length-encoded binary mask.

    Runs alternate background/foreground starting with background and cover
    the image in column-major pixel order; sum(counts) must equal
    height * width for the mask to be decodable.
    """

    height: int
    width: int
    counts: tuple[int, ...]

    def is_valid(self) -> bool:
        return (
            self.height > 0
            and self.width > 0
            and all(isinstance(c, int) and c >= 0 for c in self.counts)
            and sum(self.counts) == self.height * self.width
        )


@dataclass(frozen=True)
class PersonRecord:
    """One person instance in an image: its box, optionally its mask."""

    box: Box
    mask: RleMask | None = None


@dataclass(frozen=True)
class ReferringRecord:
    """A referring expression with its ground-truth person indices.

    ``gt_indices`` index into the owning image's person list. A rejection
    record (nobody matches) has an empty index list, and vice versa.
    """

    id: str
    text: str
    subset: Subset
    gt_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class ImageRecord:
    """One image: dimensions, the person list, and its referring records."""

    image_id: str
    width: int
    height: int
    persons: tuple[PersonRecord, ...] = ()
    referrings: tuple[ReferringRecord, ...] = ()


@dataclass(frozen=True)
class PredictionSet:
    """Model output for one referring: boxes, points, or a rejection.

    Exactly one payload is set; a rejection is represented by both ``boxes``
    and ``points`` being None. Empty lists are accepted at construction and
    canonicalized to a rejection by :func:`normalize_prediction`.
    """

    referring_id: str
    boxes: tuple[Box, ...] | None = None
    points: tuple[Point, ...] | None = None

    def __post_init__(self) -> None:
        if self.boxes is not None and self.points is not None:
            raise EvalError(
                "SCHEMA_ERROR",
                f"prediction {self.referring_id!r} carries both boxes and points",
            )

    @property
    def is_rejection(self) -> bool:
        """True iff the payload predicts nothing (after normalization)."""
        return not self.boxes and not self.points

    @classmethod
    def of_boxes(cls, referring_id: str, boxes) -> PredictionSet:
        return cls(referring_id, boxes=tuple(boxes))

    @classmethod
    def of_points(cls, referring_id: str, points) -> PredictionSet:
        return cls(referring_id, points=tuple(points))

    @classmethod
    def rejection(cls, referring_id: str) -> PredictionSet:
        return cls(referring_id)


@dataclass(frozen=True)
class Violation:
    """One dataset-invariant violation, reported as data rather than raised."""

    code: str
    image_id: str
    referring_id: str | None = None
    detail: str = ""


def normalize_prediction(raw: PredictionSet) -> PredictionSet:
    """Canonicalize a prediction: empty payloads become rejections.

    Duplicate boxes are deliberately preserved; deduplication belongs to the
    retrieval-index adapter, not to scoring. Raises INVALID_COORDINATE for
    non-finite or corner-disordered boxes and non-finite points.
    """
    if raw.boxes is not None:
        for b in raw.boxes:
            if not b.is_valid():
                raise EvalError(
                    "INVALID_COORDINATE",
                    f"prediction {raw.referring_id!r} has invalid box {b}",
                )
        if not raw.boxes:
            return PredictionSet.rejection(raw.referring_id)
        return raw
    if raw.points is not None:
        for p in raw.points:
            if not p.is_valid():
                raise EvalError(
                    "INVALID_COORDINATE",
                    f"prediction {raw.referring_id!r} has invalid point {p}",
                )
        if not raw.points:
            return PredictionSet.rejection(raw.referring_id)
        return raw
    return raw


def validate_dataset(dataset: list[ImageRecord]) -> list[Violation]:
    """Check every dataset invariant; return one Violation per breach.

    Pure and idempotent: validating the same dataset twice yields identical
    reports. An empty report means the dataset satisfies all invariants.
    """
    violations: list[Violation] = []
    seen_ids: set[str] = set()
    for image in dataset:
        iid = image.image_id
        if image.width <= 0 or image.height <= 0:
            violations.append(
                Violation("NONPOSITIVE_IMAGE_SIZE", iid, detail=f"{image.width}x{image.height}")
            )
        for pi, person in enumerate(image.persons):
            box = person.box
            if not box.is_valid():
                violations.append(Violation("INVALID_BOX", iid, detail=f"person {pi}: {box}"))
            elif not (
                0 <= box.x0 and box.x1 <= image.width and 0 <= box.y0 and box.y1 <= image.height
            ):
                violations.append(
                    Violation("BOX_OUT_OF_BOUNDS", iid, detail=f"person {pi}: {box}")
                )
            mask = person.mask
            if mask is not None:
                if (mask.height, mask.width) != (image.height, image.width):
                    violations.append(
                        Violation(
                            "MASK_DIMENSION_MISMATCH",
                            iid,
                            detail=f"person {pi}: mask {mask.height}x{mask.width}",
                        )
                    )
                elif not mask.is_valid():
                    violations.append(
                        Violation("MASK_SUM_MISMATCH", iid, detail=f"person {pi}")
                    )
        has_scored_referring = False
        for ref in image.referrings:
            if ref.id in seen_ids:
                violations.append(Violation("DUPLICATE_REFERRING_ID", iid, ref.id))
            seen_ids.add(ref.id)
            if ref.subset is not Subset.REJECTION:
                has_scored_referring = True
            for gi in ref.gt_indices:
                if not 0 <= gi < len(image.persons):
                    violations.append(
                        Violation("OUT_OF_RANGE_GT", iid, ref.id, detail=f"index {gi}")
                    )
            if len(set(ref.gt_indices)) != len(ref.gt_indices):
                violations.append(Violation("DUPLICATE_GT", iid, ref.id))
            if ref.subset is Subset.REJECTION and ref.gt_indices:
                violations.append(Violation("REJECTION_HAS_GT", iid, ref.id))
            if ref.subset is not Subset.REJECTION and not ref.gt_indices:
                violations.append(Violation("MISSING_GT", iid, ref.id))
        if has_scored_referring and not image.persons:
            violations.append(Violation("EMPTY_PERSONS", iid))
    return violations
