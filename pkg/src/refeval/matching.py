"""One-to-one assignment of predicted boxes to ground truths at a threshold.

A prediction may redeem at most one ground truth and vice versa; the paper's
"correct if IoU with any ground truth exceeds the threshold" is tightened to
a maximum-cardinality bipartite matching, the only reading under which
duplicate boxes cannot inflate precision. The prediction format carries no
confidence scores, so a score-ordered greedy is undefined here; maximum
matching is order-independent and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import EvalError

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class MatchResult:
    """A maximum one-to-one matching: (pred index, gt index) pairs at a threshold."""

    pairs: tuple[tuple[int, int], ...]
    threshold: float

    @property
    def cardinality(self) -> int:
        return len(self.pairs)


def match_at_threshold(m: np.ndarray, t: float) -> MatchResult:
    """Maximum-cardinality matching on edges {(i, j) : m[i, j] >= t}.

    Deterministic: edges are seeded greedily in descending IoU with
    (pred, gt) lexicographic tie-breaks, then augmenting paths (scanned in
    ascending index order) grow the matching to maximum cardinality.
    """
    if not 0.5 <= t <= 0.95:
        raise ValueError(f"threshold {t} outside [0.5, 0.95]")
    m = np.asarray(m, dtype=float)
    n_pred, n_gt = m.shape
    pred_of_gt = [-1] * n_gt
    gt_of_pred = [-1] * n_pred
    edges = [
        (i, j)
        for i in range(n_pred)
        for j in range(n_gt)
        if m[i, j] >= t
    ]
    edges.sort(key=lambda e: (-m[e[0], e[1]], e[0], e[1]))
    adjacency: list[list[int]] = [[] for _ in range(n_pred)]
    for i, j in edges:
        adjacency[i].append(j)
        if gt_of_pred[i] == -1 and pred_of_gt[j] == -1:
            gt_of_pred[i] = j
            pred_of_gt[j] = i
    for i in range(n_pred):
        adjacency[i].sort()

    def augment(i: int, visited: list[bool]) -> bool:
        for j in adjacency[i]:
            if visited[j]:
                continue
            visited[j] = True
            if pred_of_gt[j] == -1 or augment(pred_of_gt[j], visited):
                pred_of_gt[j] = i
                gt_of_pred[i] = j
                return True
        return False

    for i in range(n_pred):
        if gt_of_pred[i] == -1 and adjacency[i]:
            augment(i, [False] * n_gt)

    pairs = tuple((i, gt_of_pred[i]) for i in range(n_pred) if gt_of_pred[i] != -1)
    return MatchResult(pairs=pairs, threshold=t)


def brute_force_match(m: np.ndarray, t: float) -> int:
    """Exact maximum matching cardinality by exhaustive enumeration.

    Verification oracle for :func:`match_at_threshold`; refuses matrices
    whose smaller side exceeds BRUTE_FORCE_LIMIT.
    """
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    if min(rows, cols) > BRUTE_FORCE_LIMIT:
        raise EvalError(
            "SIZE_LIMIT",
            f"min dimension {min(rows, cols)} exceeds brute-force limit {BRUTE_FORCE_LIMIT}",
        )
    if cols > rows:
        m = m.T
        rows, cols = cols, rows
    # Enumerate row by row over bitmasks of the (small) column side; the memo
    # only prunes revisited states and never changes the enumerated optimum.
    edge = m >= t
    memo: dict[tuple[int, int], int] = {}

    def best(row: int, used: int) -> int:
        if row == rows:
            return 0
        key = (row, used)
        if key in memo:
            return memo[key]
        result = best(row + 1, used)
        for col in range(cols):
            bit = 1 << col
            if not used & bit and edge[row, col]:
                result = max(result, 1 + best(row + 1, used | bit))
        memo[key] = result
        return result

    return best(0, 0)
