"""Dataset-level statistics: sizes, vocabulary, and per-image distributions.

The published tallies never state a tokenization rule, so the one used for
vocabulary and word counts is fixed here, in one place: lowercase, split on
whitespace, strip leading/trailing punctuation per token (interior hyphens
survive), drop empties.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from .types import SCORED_SUBSETS, ImageRecord, Subset

_SUBSET_ORDER = (*SCORED_SUBSETS, Subset.REJECTION)

_STRIP_CHARS = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with edge punctuation stripped."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(_STRIP_CHARS)
        if token:
            tokens.append(token)
    return tokens


@dataclass(frozen=True)
class SubsetStats:
    """Per-subset referring tallies."""

    subset: Subset
    n_referrings: int
    avg_boxes_per_ref: float
    avg_words_per_ref: float


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level statistics mirroring the benchmark's published tables.

    Averages are None (absent, not zero) when their denominator is empty.
    ``avg_boxes_per_ref`` counts rejection referrings as zero-box entries, so
    it is recomputable from ``boxes_per_ref_hist``; per-subset averages in
    ``per_subset`` run over each subset's own referrings only.
    """

    n_images: int
    n_referrings: int
    vocab_size: int
    avg_words_per_ref: float | None
    avg_boxes_per_ref: float | None
    avg_persons_per_image: float | None
    avg_image_size: tuple[float, float] | None
    persons_per_image_hist: dict[int, int]
    boxes_per_ref_hist: dict[int, int]
    per_subset: tuple[SubsetStats, ...]


def compute_stats(dataset: list[ImageRecord]) -> DatasetStats:
    """Single deterministic pass over a validated dataset."""
    n_images = len(dataset)
    persons_hist: dict[int, int] = {}
    boxes_hist: dict[int, int] = {}
    vocab: set[str] = set()
    total_tokens = 0
    n_referrings = 0
    width_sum = 0.0
    height_sum = 0.0
    by_subset: dict[Subset, tuple[int, int, int]] = {}

    for image in dataset:
        width_sum += image.width
        height_sum += image.height
        persons_hist[len(image.persons)] = persons_hist.get(len(image.persons), 0) + 1
        for ref in image.referrings:
            n_referrings += 1
            n_boxes = len(ref.gt_indices)
            boxes_hist[n_boxes] = boxes_hist.get(n_boxes, 0) + 1
            tokens = tokenize(ref.text)
            total_tokens += len(tokens)
            vocab.update(tokens)
            refs, boxes, words = by_subset.get(ref.subset, (0, 0, 0))
            by_subset[ref.subset] = (refs + 1, boxes + n_boxes, words + len(tokens))

    total_boxes = sum(k * v for k, v in boxes_hist.items())
    per_subset = tuple(
        SubsetStats(
            subset=subset,
            n_referrings=by_subset[subset][0],
            avg_boxes_per_ref=by_subset[subset][1] / by_subset[subset][0],
            avg_words_per_ref=by_subset[subset][2] / by_subset[subset][0],
        )
        for subset in _SUBSET_ORDER
        if subset in by_subset
    )
    return DatasetStats(
        n_images=n_images,
        n_referrings=n_referrings,
        vocab_size=len(vocab),
        avg_words_per_ref=total_tokens / n_referrings if n_referrings else None,
        avg_boxes_per_ref=total_boxes / n_referrings if n_referrings else None,
        avg_persons_per_image=(
            sum(k * v for k, v in persons_hist.items()) / n_images if n_images else None
        ),
        avg_image_size=(width_sum / n_images, height_sum / n_images) if n_images else None,
        persons_per_image_hist=dict(sorted(persons_hist.items())),
        boxes_per_ref_hist=dict(sorted(boxes_hist.items())),
        per_subset=per_subset,
    )
