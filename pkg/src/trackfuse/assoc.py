"""Similarity primitives and the gated optimal-assignment solver.

All trackers reduce data association to one call: build a :class:`CostMatrix`
(tracks x detections, with a boolean admissibility mask) and hand it to
:func:`solve_assignment`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, InvalidValue, ZeroVector
from .model import BoundingBox

GATE_SENTINEL = 1e9
# Replaces inadmissible/padded cells; dominates any real cost without
# overflowing row or column sums.


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = max(0.0, ix2 - ix1)
    ih = max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter <= 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def centroid_distance(a: BoundingBox, b: BoundingBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two embedding vectors.

    Raises:
        DimensionMismatch: vectors have different lengths.
        ZeroVector: either vector has zero norm.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"embedding shapes differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero-norm vectors")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class CostMatrix:
    """Rectangular track-by-detection cost matrix with an admissibility mask."""

    values: np.ndarray
    gate_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.gate_mask, dtype=bool)
        if values.ndim != 2 or mask.shape != values.shape:
            raise InvalidValue(
                f"cost values {values.shape} and gate mask {mask.shape} must be equal 2-D shapes"
            )
        if not np.all(np.isfinite(values[mask])):
            raise InvalidValue("admissible cost entries must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gate_mask", mask)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class AssignmentResult:
    matches: Tuple[Tuple[int, int], ...]
    unmatched_tracks: Tuple[int, ...]
    unmatched_detections: Tuple[int, ...]


def solve_assignment(cost: CostMatrix) -> AssignmentResult:
    """Minimum-cost maximum-cardinality matching over admissible pairs.

    Among matchings that use admissible pairs only, cardinality is maximal and
    the total cost minimal; ties are broken deterministically toward the lowest
    track index, then the lowest detection index.  When gated pairs are present
    the sentinel construction resolves real-cost optimality to roughly
    1e-7 * n (float64 mixing of 1e9 sentinels with O(1) costs); ungated
    matrices are solved to full float precision.
    """
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return AssignmentResult((), tuple(range(n_rows)), tuple(range(n_cols)))

    n = max(n_rows, n_cols)
    padded = np.full((n, n), GATE_SENTINEL, dtype=float)
    padded[:n_rows, :n_cols] = np.where(cost.gate_mask, cost.values, GATE_SENTINEL)
    real = np.zeros((n, n), dtype=bool)
    real[:n_rows, :n_cols] = cost.gate_mask

    cols = _lex_min_assignment(padded, real, n_rows)

    matches = tuple(
        (r, int(c)) for r, c in enumerate(cols) if c < n_cols and real[r, int(c)]
    )
    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    return AssignmentResult(
        matches,
        tuple(r for r in range(n_rows) if r not in matched_rows),
        tuple(c for c in range(n_cols) if c not in matched_cols),
    )


def _split_cost(padded, real, rows, cols) -> Tuple[int, float]:
    """Total of an assignment as (sentinel count, real-cost sum), summed separately."""
    picked_real = real[rows, cols]
    sent = int(np.size(picked_real) - np.count_nonzero(picked_real))
    return sent, float(padded[rows, cols][picked_real].sum())


def _lex_min_assignment(padded: np.ndarray, real: np.ndarray, n_fix: int) -> List[int]:
    """Column choice per row of the optimal assignment, lexicographically smallest.

    Rows are fixed in order (only the first ``n_fix`` real rows need canonical
    choices); for each row the smallest column that still permits an optimal
    completion is kept.  Feasibility is checked as (sentinel count, real cost)
    pairs so sentinel magnitude never blurs real-cost comparisons.
    """
    n = padded.shape[0]
    rows0, cols0 = linear_sum_assignment(padded)
    need_sent, need_real = _split_cost(padded, real, rows0, cols0)
    solution = [int(cols0[np.argwhere(rows0 == r)[0, 0]]) for r in range(n)]

    avail = list(range(n))
    chosen: List[int] = []
    for r in range(min(n_fix, n)):
        rest_rows = np.arange(r + 1, n)
        # Per-row top-2 minima over the still-available columns, for cheap pruning.
        if rest_rows.size:
            sub_all = padded[np.ix_(rest_rows, avail)]
            order = np.argsort(sub_all, axis=1)
            min1 = sub_all[np.arange(len(rest_rows)), order[:, 0]]
            min1_col = np.asarray(avail)[order[:, 0]]
            min2 = (
                sub_all[np.arange(len(rest_rows)), order[:, 1]]
                if len(avail) > 1
                else min1
            )
        picked = None
        for c in avail:
            pair_sent = 0 if real[r, c] else 1
            pair_real = float(padded[r, c]) if real[r, c] else 0.0
            if pair_sent > need_sent:
                continue
            if rest_rows.size == 0:
                cand = (pair_sent, pair_real)
            else:
                # Lower bound with column c removed; prune before the exact solve.
                lb = pair_real + pair_sent * GATE_SENTINEL
                lb += float(np.where(min1_col == c, min2, min1).sum())
                need_total = need_sent * GATE_SENTINEL + need_real
                margin = 1e-9 + 1e-12 * max(abs(lb), abs(need_total))
                if lb > need_total + margin:
                    continue
                rest_cols = [c2 for c2 in avail if c2 != c]
                sub = padded[np.ix_(rest_rows, rest_cols)]
                srows, scols = linear_sum_assignment(sub)
                s_sent, s_real = _split_cost(
                    sub, real[np.ix_(rest_rows, rest_cols)], srows, scols
                )
                cand = (pair_sent + s_sent, pair_real + s_real)
            if cand[0] == need_sent and cand[1] <= need_real + 1e-9 * max(1.0, abs(need_real)):
                picked = c
                need_sent -= pair_sent
                need_real -= pair_real
                break
        if picked is None:
            # Float slack too tight for every candidate; keep the solver's choice.
            picked = solution[r]
            need_sent -= 0 if real[r, picked] else 1
            need_real -= float(padded[r, picked]) if real[r, picked] else 0.0
        chosen.append(picked)
        avail.remove(picked)

    # Rows beyond n_fix (padding) take the remaining columns in order.
    chosen.extend(avail)
    return chosen
