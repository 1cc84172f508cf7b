"""Seeded synthetic benchmarks and reference baseline predictors.

The generator keeps every pair of person boxes below 0.5 IoU so that
matching has a unique maximum at every threshold, which makes hand-computed
oracles exact; masks are rectangles equal to their boxes so point containment
is analytically checkable. A single integer seed drives one explicit
generator; given the seed, output is byte-reproducible.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field

from .metrics import evaluate_referring
from .types import (
    SCORED_SUBSETS,
    Box,
    EvalError,
    ImageRecord,
    PersonRecord,
    PredictionSet,
    ReferringRecord,
    RleMask,
    Subset,
)

_PLACEMENT_RETRIES = 200

#: Referrings with at least this many ground truths share one bucket in the
#: instance-count breakdown.
POOL_BUCKET = 8


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthetic dataset; all ranges are inclusive."""

    seed: int = 0
    n_images: int = 10
    persons_per_image: tuple[int, int] = (4, 8)
    gts_per_ref: tuple[int, int] = (1, 3)
    refs_per_image: tuple[int, int] = (1, 3)
    image_size: tuple[int, int] = (640, 480)
    jitter: float = 0.0
    rejection_fraction: float = 0.0

    def __post_init__(self) -> None:
        for name, (lo, hi) in (
            ("persons_per_image", self.persons_per_image),
            ("gts_per_ref", self.gts_per_ref),
            ("refs_per_image", self.refs_per_image),
        ):
            if lo > hi or lo < 0:
                raise ValueError(f"{name} range ({lo}, {hi}) is empty or negative")
        if self.gts_per_ref[0] < 1:
            raise ValueError("gts_per_ref lower bound must be at least 1")
        if self.persons_per_image[0] < self.gts_per_ref[1]:
            raise ValueError("persons_per_image lower bound must cover max gts_per_ref")
        if self.n_images < 0:
            raise ValueError("n_images must be non-negative")
        if self.image_size[0] < 8 or self.image_size[1] < 8:
            raise ValueError("image_size must be at least 8x8")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")
        if not 0.0 <= self.rejection_fraction <= 1.0:
            raise ValueError("rejection_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class GenerationLedger:
    """Ground-truth tallies recorded while generating, for stats verification."""

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


def rectangle_mask(height: int, width: int, box: Box) -> RleMask:
    """Full-image RLE whose foreground is exactly the box's pixel rectangle."""
    x0, y0, x1, y1 = int(box.x0), int(box.y0), int(box.x1), int(box.y1)
    if x1 <= x0 or y1 <= y0:
        return RleMask(height=height, width=width, counts=(height * width,))
    counts = [x0 * height + y0]
    fg = y1 - y0
    for _ in range(x1 - x0 - 1):
        counts.extend((fg, height - fg))
    counts.extend((fg, (width - x1) * height + (height - y1)))
    return RleMask(height=height, width=width, counts=tuple(counts))


def _place_persons(rng: random.Random, n: int, width: int, height: int) -> list[Box]:
    """Sample n integer boxes with pairwise IoU < 0.5, or fail."""
    from .geometry import box_iou

    max_w = max(3, width // 4)
    max_h = max(3, height // 4)
    boxes: list[Box] = []
    for _ in range(n):
        for _attempt in range(_PLACEMENT_RETRIES):
            w = rng.randint(2, max_w)
            h = rng.randint(2, max_h)
            x0 = rng.randint(0, width - w)
            y0 = rng.randint(0, height - h)
            candidate = Box(float(x0), float(y0), float(x0 + w), float(y0 + h))
            if all(box_iou(candidate, other) < 0.5 for other in boxes):
                boxes.append(candidate)
                break
        else:
            raise EvalError(
                "CONFIG_INFEASIBLE",
                f"could not place {n} persons below 0.5 pairwise IoU "
                f"in a {width}x{height} image after {_PLACEMENT_RETRIES} retries",
            )
    return boxes


def generate(cfg: SynthConfig) -> tuple[list[ImageRecord], GenerationLedger]:
    """Build a deterministic synthetic dataset plus its generation ledger."""
    rng = random.Random(cfg.seed)
    width, height = cfg.image_size
    images: list[ImageRecord] = []
    persons_hist: dict[int, int] = {}
    boxes_hist: dict[int, int] = {}
    per_subset: dict[str, int] = {}
    vocab: set[str] = set()
    persons_total = 0
    gt_total = 0
    words_total = 0
    n_referrings = 0
    n_rejections = 0
    subset_cursor = 0

    for i in range(cfg.n_images):
        n_persons = rng.randint(*cfg.persons_per_image)
        boxes = _place_persons(rng, n_persons, width, height)
        persons = tuple(
            PersonRecord(box=b, mask=rectangle_mask(height, width, b)) for b in boxes
        )
        persons_total += n_persons
        persons_hist[n_persons] = persons_hist.get(n_persons, 0) + 1

        referrings = []
        for j in range(rng.randint(*cfg.refs_per_image)):
            ref_id = f"img{i:05d}-ref{j}"
            if rng.random() < cfg.rejection_fraction:
                subset = Subset.REJECTION
                gt_indices: tuple[int, ...] = ()
                text = f"nobody here wears marker {i}-{j}"
                n_rejections += 1
            else:
                subset = SCORED_SUBSETS[subset_cursor % len(SCORED_SUBSETS)]
                subset_cursor += 1
                k = rng.randint(*cfg.gts_per_ref)
                gt_indices = tuple(sorted(rng.sample(range(n_persons), k)))
                text = f"the {subset.value} group {i}-{j} covering {k} of {n_persons} people"
            referrings.append(
                ReferringRecord(id=ref_id, text=text, subset=subset, gt_indices=gt_indices)
            )
            n_referrings += 1
            gt_total += len(gt_indices)
            boxes_hist[len(gt_indices)] = boxes_hist.get(len(gt_indices), 0) + 1
            per_subset[subset.value] = per_subset.get(subset.value, 0) + 1
            words = text.split()
            words_total += len(words)
            vocab.update(words)

        images.append(
            ImageRecord(
                image_id=f"img{i:05d}",
                width=width,
                height=height,
                persons=persons,
                referrings=tuple(referrings),
            )
        )

    ledger = GenerationLedger(
        seed=cfg.seed,
        n_images=cfg.n_images,
        n_referrings=n_referrings,
        n_rejection_referrings=n_rejections,
        per_subset_referrings=dict(sorted(per_subset.items())),
        persons_total=persons_total,
        gt_boxes_total=gt_total,
        words_total=words_total,
        vocab_size=len(vocab),
        persons_per_image_hist=dict(sorted(persons_hist.items())),
        boxes_per_ref_hist=dict(sorted(boxes_hist.items())),
    )
    return images, ledger


@dataclass(frozen=True)
class BaselineKind:
    """A reference predictor: all_persons, oracle, top_k:K, empty, jittered_oracle:J."""

    name: str
    k: int | None = None
    jitter: float | None = None

    _NAMES = ("all_persons", "oracle", "top_k", "empty", "jittered_oracle")

    def __post_init__(self) -> None:
        if self.name not in self._NAMES:
            raise ValueError(f"unknown baseline {self.name!r}; expected one of {self._NAMES}")
        if self.name == "top_k" and (self.k is None or self.k < 1):
            raise ValueError("top_k needs k >= 1")
        if self.name == "jittered_oracle" and (self.jitter is None or self.jitter < 0):
            raise ValueError("jittered_oracle needs jitter >= 0")

    @classmethod
    def parse(cls, spec: str) -> BaselineKind:
        """Parse CLI syntax: bare name, 'top_k:K', or 'jittered_oracle:J'."""
        name, _, arg = spec.partition(":")
        if name == "top_k":
            if not arg:
                raise ValueError("top_k needs a count, e.g. top_k:2")
            return cls(name, k=int(arg))
        if name == "jittered_oracle":
            return cls(name, jitter=float(arg) if arg else 0.0)
        if arg:
            raise ValueError(f"baseline {name!r} takes no argument")
        return cls(name)

    def __str__(self) -> str:
        if self.name == "top_k":
            return f"top_k:{self.k}"
        if self.name == "jittered_oracle":
            return f"jittered_oracle:{self.jitter}"
        return self.name


def _jittered(rng: random.Random, box: Box, jitter: float) -> Box:
    w = box.x1 - box.x0
    h = box.y1 - box.y0
    return Box(
        box.x0 + rng.uniform(-jitter, jitter) * w,
        box.y0 + rng.uniform(-jitter, jitter) * h,
        box.x1 + rng.uniform(-jitter, jitter) * w,
        box.y1 + rng.uniform(-jitter, jitter) * h,
    )


def run_baseline(
    kind: BaselineKind, dataset: list[ImageRecord], *, seed: int = 0
) -> list[PredictionSet]:
    """Produce one prediction per referring, in dataset order.

    all_persons answers every referring (rejections included) with every
    person box; oracle echoes the ground truth; top_k keeps the first k
    ground-truth boxes, mimicking the few-instance bias of single-target
    models; empty rejects everything; jittered_oracle perturbs the ground
    truth deterministically under the given seed.
    """
    rng = random.Random(seed)
    out: list[PredictionSet] = []
    for image in dataset:
        all_boxes = [p.box for p in image.persons]
        for ref in image.referrings:
            gts = [image.persons[i].box for i in ref.gt_indices]
            if kind.name == "all_persons":
                boxes = all_boxes
            elif kind.name == "oracle":
                boxes = gts
            elif kind.name == "top_k":
                boxes = gts[: kind.k]
            elif kind.name == "empty":
                boxes = []
            else:
                boxes = [_jittered(rng, b, kind.jitter or 0.0) for b in gts]
            if boxes:
                out.append(PredictionSet.of_boxes(ref.id, boxes))
            else:
                out.append(PredictionSet.rejection(ref.id))
    return out


@dataclass(frozen=True)
class BucketStat:
    """Mean scores over the referrings whose ground truth has one given size."""

    n_referrings: int
    recall: float
    precision: float


def recall_by_instance_count(
    dataset: list[ImageRecord],
    predictions: list[PredictionSet],
    *,
    density_numerator: str = "image-persons",
) -> dict[int, BucketStat]:
    """Bucket non-rejection referrings by ground-truth count and average
    their threshold-averaged recall/precision per bucket.

    Counts of POOL_BUCKET or more share the final bucket. Means use exact
    rational arithmetic so forced-by-construction values (e.g. recall 1/n
    under a top-1 predictor) come out exact.
    """
    known = {ref.id for image in dataset for ref in image.referrings}
    by_id: dict[str, PredictionSet] = {}
    for p in predictions:
        if p.referring_id not in known:
            raise EvalError(
                "UNKNOWN_REFERRING_ID",
                f"prediction references unknown referring {p.referring_id!r}",
            )
        by_id[p.referring_id] = p
    buckets: dict[int, list[tuple[float, float]]] = {}
    for image in dataset:
        for ref in image.referrings:
            if ref.subset is Subset.REJECTION:
                continue
            triple = evaluate_referring(
                image, ref, by_id.get(ref.id), density_numerator=density_numerator
            )
            key = min(len(ref.gt_indices), POOL_BUCKET)
            buckets.setdefault(key, []).append((triple.recall, triple.precision))
    return {
        key: BucketStat(
            n_referrings=len(pairs),
            recall=float(statistics.mean(r for r, _ in pairs)),
            precision=float(statistics.mean(p for _, p in pairs)),
        )
        for key, pairs in sorted(buckets.items())
    }
