"""Classification metrics, label-stability measures, and stage timing.

Evaluation is frame-level: each detection with ground truth contributes one
(gt, predicted) pair.  Macro F1 averages over the full label set including
zero-support classes (their F1 counts as 0), which is why macro can sit far
below weighted F1 on imbalanced data.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyEvaluation, IndexOutOfRange, NoEligibleTracks
from .model import SequenceResult

STAGE_DETECTION_INGEST = "detection-ingest"
STAGE_CLASSIFICATION_INGEST = "classification-ingest"
STAGE_MOT = "mot"
STAGE_REID_COST = "reid-cost"
STAGE_FUSION = "fusion"
STAGE_METRICS = "metrics"

ALL_STAGES = (
    STAGE_DETECTION_INGEST,
    STAGE_CLASSIFICATION_INGEST,
    STAGE_MOT,
    STAGE_REID_COST,
    STAGE_FUSION,
    STAGE_METRICS,
)


class ConfusionMatrix:
    """Square count matrix; rows are ground truth, columns are predictions."""

    __slots__ = ("counts",)

    def __init__(self, counts: np.ndarray):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise IndexOutOfRange(f"confusion matrix must be square, got {counts.shape}")
        if np.any(counts < 0):
            raise IndexOutOfRange("confusion counts must be non-negative")
        counts.flags.writeable = False
        self.counts = counts

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __repr__(self) -> str:
        return f"ConfusionMatrix({self.counts.tolist()!r})"


def confusion(pairs: Iterable[Tuple[int, int]], n_classes: int) -> ConfusionMatrix:
    """Tabulate (ground truth, predicted) index pairs."""
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for gt, pred in pairs:
        if not (0 <= gt < n_classes and 0 <= pred < n_classes):
            raise IndexOutOfRange(f"pair ({gt}, {pred}) outside [0, {n_classes})")
        counts[gt, pred] += 1
    return ConfusionMatrix(counts)


def accuracy_at_1(cm: ConfusionMatrix) -> float:
    """Fraction of evaluated detections whose prediction matched ground truth."""
    if cm.total == 0:
        raise EmptyEvaluation("no evaluated detections")
    return float(np.trace(cm.counts)) / cm.total


@dataclass(frozen=True)
class F1Scores:
    macro: float
    weighted: float
    per_class: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_class, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "per_class", arr)


def f1_scores(cm: ConfusionMatrix) -> F1Scores:
    """Per-class, macro, and support-weighted F1.

    Classes with P + R = 0 score 0 and still enter the macro mean.
    """
    if cm.total == 0:
        raise EmptyEvaluation("no evaluated detections")
    counts = cm.counts.astype(float)
    diag = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    precision = np.divide(diag, predicted, out=np.zeros_like(diag), where=predicted > 0)
    recall = np.divide(diag, support, out=np.zeros_like(diag), where=support > 0)
    pr = precision + recall
    per_class = np.divide(2.0 * precision * recall, pr, out=np.zeros_like(diag), where=pr > 0)
    macro = float(per_class.mean())
    weighted = float((per_class * support).sum() / support.sum())
    return F1Scores(macro=macro, weighted=weighted, per_class=per_class)


def label_flip_rate(result: SequenceResult, use_fused: bool) -> float:
    """Fraction of consecutive same-track label pairs that differ.

    Raises NoEligibleTracks when no track carries two or more detections.
    """
    by_track: Dict[int, List[Tuple[int, int]]] = {}
    for rec in result.per_frame:
        if rec.track_id is None:
            continue
        label = rec.fused_label if use_fused else rec.raw_label
        by_track.setdefault(rec.track_id, []).append((rec.frame_id, label))
    flips = 0
    pairs = 0
    for recs in by_track.values():
        recs.sort()
        labels = [lbl for _, lbl in recs]
        pairs += len(labels) - 1
        flips += sum(a != b for a, b in zip(labels, labels[1:]))
    if pairs == 0:
        raise NoEligibleTracks("flip rate needs a track with at least two entries")
    return flips / pairs


def evaluation_pairs(results: Mapping[str, SequenceResult], use_fused: bool,
                     include_unmatched: bool = True) -> List[Tuple[int, int]]:
    """(gt, predicted) pairs over all sequences, for detections carrying ground truth."""
    pairs = []
    for seq in sorted(results):
        for rec in results[seq].per_frame:
            if rec.detection.gt_class is None:
                continue
            if rec.track_id is None and not include_unmatched:
                continue
            pred = rec.fused_label if use_fused else rec.raw_label
            pairs.append((rec.detection.gt_class, pred))
    return pairs


class StageTimer:
    """Accumulates wall time per named pipeline stage (monotonic clock)."""

    def __init__(self):
        self.totals_s: Dict[str, float] = {}
        self.counts: Dict[str, int] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.totals_s[name] = self.totals_s.get(name, 0.0) + elapsed
            self.counts[name] = self.counts.get(name, 0) + 1

    def merge(self, other: "StageTimer") -> None:
        for name, total in other.totals_s.items():
            self.totals_s[name] = self.totals_s.get(name, 0.0) + total
            self.counts[name] = self.counts.get(name, 0) + other.counts[name]


@dataclass(frozen=True)
class TimingProfile:
    """Per-stage totals (ms) and per-sample means for one instrumented run."""

    samples: int
    total_ms: Dict[str, float] = field(default_factory=dict)

    def stage_total(self, name: str) -> float:
        return self.total_ms.get(name, 0.0)

    def stage_mean(self, name: str) -> float:
        if self.samples == 0:
            return 0.0
        return self.stage_total(name) / self.samples

    @property
    def overall_mean(self) -> float:
        return sum(self.stage_mean(s) for s in ALL_STAGES if s != STAGE_REID_COST)


def profile(timer: StageTimer, samples: int) -> TimingProfile:
    """Snapshot a timer into a report; ``samples`` is the image-sample count."""
    if samples < 0:
        raise EmptyEvaluation("sample count must be >= 0")
    totals = {name: total * 1000.0 for name, total in timer.totals_s.items()}
    return TimingProfile(samples=samples, total_ms=totals)


def format_profile_table(profiles: Mapping[str, TimingProfile]) -> str:
    """Aligned per-method table of per-sample stage means in milliseconds.

    The reid-cost stage is nested inside mot and reported in its own column.
    """
    headers = ["Method", "Total", "MOT", "ReID", "Classification", "Detection",
               "Fusion", "Metrics"]
    rows = [headers]
    for name in sorted(profiles):
        p = profiles[name]
        rows.append([
            name,
            f"{p.overall_mean:.3f}",
            f"{p.stage_mean(STAGE_MOT):.3f}",
            f"{p.stage_mean(STAGE_REID_COST):.3f}",
            f"{p.stage_mean(STAGE_CLASSIFICATION_INGEST):.3f}",
            f"{p.stage_mean(STAGE_DETECTION_INGEST):.3f}",
            f"{p.stage_mean(STAGE_FUSION):.3f}",
            f"{p.stage_mean(STAGE_METRICS):.3f}",
        ])
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(len(headers))))
    return "\n".join(lines)
