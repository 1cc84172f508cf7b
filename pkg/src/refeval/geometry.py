"""Geometric primitives: box IoU, RLE mask codec, point-in-mask, face linking.

All functions are pure over immutable inputs. IoU uses continuous areas
(rasterization exists only as a test oracle); two zero-area boxes have IoU 0
by the 0/0 -> 0 rule, so degenerate predictions can never count as correct.
"""

from __future__ import annotations

import math

import numpy as np

from .types import Box, EvalError, Point, RleMask

#: IoU matrix alias: shape (n_predictions, n_ground_truths), entries in [0, 1].
IoUMatrix = np.ndarray


def box_iou(a: Box, b: Box) -> float:
    """Intersection area over union area of two boxes; 0 when the union is 0."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    if union <= 0:
        return 0.0
    return inter / union


def iou_matrix(preds: list[Box], gts: list[Box]) -> IoUMatrix:
    """Pairwise IoU of predictions (rows) against ground truths (columns)."""
    if not preds or not gts:
        return np.zeros((len(preds), len(gts)))
    a = np.array([(b.x0, b.y0, b.x1, b.y1) for b in preds], dtype=float)
    g = np.array([(b.x0, b.y0, b.x1, b.y1) for b in gts], dtype=float)
    iw = np.minimum(a[:, None, 2], g[None, :, 2]) - np.maximum(a[:, None, 0], g[None, :, 0])
    ih = np.minimum(a[:, None, 3], g[None, :, 3]) - np.maximum(a[:, None, 1], g[None, :, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_a = np.maximum(0.0, a[:, 2] - a[:, 0]) * np.maximum(0.0, a[:, 3] - a[:, 1])
    area_g = np.maximum(0.0, g[:, 2] - g[:, 0]) * np.maximum(0.0, g[:, 3] - g[:, 1])
    union = area_a[:, None] + area_g[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def rle_decode(mask: RleMask) -> np.ndarray:
    """Expand an RLE mask into a (height, width) boolean bitmap.

    Runs are laid out in column-major pixel order, first run background.
    """
    total = mask.height * mask.width
    if any(c < 0 for c in mask.counts) or sum(mask.counts) != total:
        raise EvalError(
            "SUM_MISMATCH",
            f"RLE counts sum to {sum(mask.counts)}, expected {total} "
            f"for a {mask.height}x{mask.width} mask",
        )
    values = np.zeros(len(mask.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, np.asarray(mask.counts, dtype=np.int64))
    return flat.reshape((mask.height, mask.width), order="F")


def rle_encode(bitmap: np.ndarray) -> RleMask:
    """Encode a (height, width) boolean bitmap as a minimal background-first RLE."""
    bitmap = np.asarray(bitmap, dtype=bool)
    if bitmap.ndim != 2 or bitmap.size == 0:
        raise EvalError("SUM_MISMATCH", "bitmap must be a non-empty 2-D array")
    h, w = bitmap.shape
    flat = bitmap.reshape(-1, order="F")
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    runs = np.diff(np.concatenate(([0], boundaries, [flat.size])))
    counts = [int(c) for c in runs]
    if flat[0]:
        counts.insert(0, 0)
    return RleMask(height=h, width=w, counts=tuple(counts))


def point_in_mask(p: Point, mask: RleMask) -> bool:
    """True iff the pixel under the point is mask foreground.

    The pixel is (floor(x), floor(y)) with a top-left origin; points outside
    the image bounds are never inside.
    """
    col = math.floor(p.x)
    row = math.floor(p.y)
    if not (0 <= col < mask.width and 0 <= row < mask.height):
        return False
    return bool(rle_decode(mask)[row, col])


def link_face_to_person(face: Box, persons: list[Box]) -> int | None:
    """Pick the person box a detected face belongs to.

    Ranks candidates by intersection-over-face-area (a face is a sub-region
    of its person, so IoU would punish large person boxes), breaking ties by
    smaller person area and then lower index. None when nothing overlaps.
    """
    face_area = face.area()
    if face_area <= 0 or not persons:
        return None
    best: tuple[float, float, int] | None = None
    for i, person in enumerate(persons):
        iw = min(face.x1, person.x1) - max(face.x0, person.x0)
        ih = min(face.y1, person.y1) - max(face.y0, person.y0)
        inter = iw * ih if iw > 0 and ih > 0 else 0.0
        ratio = inter / face_area
        if ratio <= 0:
            continue
        key = (-ratio, person.area(), i)
        if best is None or key < best:
            best = key
    return best[2] if best is not None else None
