"""Core value types: label sets, boxes, class distributions, tracks, results.

All types here are immutable after construction (frozen dataclasses, read-only
numpy arrays) and therefore safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateSum, InvalidValue, WrongLength

if TYPE_CHECKING:
    from .motion import KalmanState

PROB_FLOOR = 1e-12
# Probabilities are floored here before any log is taken, so log-space math
# stays finite while the argmax of any realistically confident class survives.


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class LabelSet:
    """Ordered, closed set of class names; position in ``names`` is the class index."""

    __slots__ = ("names", "_by_name")

    def __init__(self, names: Sequence[str]):
        names = tuple(str(n) for n in names)
        if not names:
            raise InvalidValue("label set must contain at least one class")
        if len(set(names)) != len(names):
            raise InvalidValue("label names must be unique")
        self.names = names
        self._by_name = {n: i for i, n in enumerate(names)}

    def index(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise InvalidValue(f"unknown label {name!r}") from None

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, i: int) -> str:
        return self.names[i]

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSet) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"LabelSet({list(self.names)!r})"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in image pixel coordinates, corner form (x1, y1, x2, y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidValue(f"bbox {name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise InvalidValue(
                f"bbox corners must satisfy x2 > x1 and y2 > y1, got {self.as_tuple()}"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    """Probability vector over the closed label set.

    Instances must already lie on the floored simplex: strictly positive
    entries summing to 1 within 1e-6.  Data from outside the process goes
    through :func:`validate_distribution` instead of this constructor.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InvalidValue("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(probs)):
            raise InvalidValue("probs must be finite")
        if np.any(probs <= 0.0):
            raise InvalidValue("probs must be strictly positive; run validate_distribution")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-6:
            raise InvalidValue(f"probs must sum to 1 within 1e-6, got {total!r}")
        object.__setattr__(self, "probs", _readonly(probs))

    def __len__(self) -> int:
        return int(self.probs.size)

    @property
    def argmax(self) -> int:
        # np.argmax breaks ties toward the lowest index, which is the contract.
        return int(np.argmax(self.probs))

    def log(self) -> np.ndarray:
        return np.log(self.probs)


def validate_distribution(raw, n_classes: int) -> ClassDistribution:
    """Validate an ingested score vector and project it onto the floored simplex.

    Entries are floored at ``PROB_FLOOR``, then renormalized; the floor+renorm
    pass is iterated to a fixpoint so that validating an already-validated
    vector reproduces it exactly.

    Raises:
        WrongLength: length differs from ``n_classes``.
        InvalidValue: any entry is negative, NaN, or infinite.
        DegenerateSum: the raw sum is below 1e-9 and cannot be normalized.
    """
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size != n_classes:
        raise WrongLength(f"expected {n_classes} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidValue("distribution entries must be finite")
    if np.any(arr < 0.0):
        raise InvalidValue("distribution entries must be non-negative")
    if float(arr.sum()) < 1e-9:
        raise DegenerateSum(f"sum {float(arr.sum())!r} is too small to normalize")

    x = arr
    for _ in range(16):
        y = np.maximum(x, PROB_FLOOR)
        total = float(y.sum())
        if abs(total - 1.0) > 1e-12:
            y = y / total
        if np.array_equal(y, x):
            break
        x = y
    return ClassDistribution(x)


@dataclass(frozen=True, eq=False)
class Detection:
    """One per-frame observation: box, detector score, class distribution.

    ``embedding`` is an optional appearance vector; ``gt_class``/``gt_track``
    carry ground truth for evaluation and stay None at inference time.
    """

    frame_id: int
    bbox: BoundingBox
    score: float
    dist: ClassDistribution
    embedding: Optional[np.ndarray] = None
    gt_class: Optional[int] = None
    gt_track: Optional[int] = None

    def __post_init__(self):
        if int(self.frame_id) != self.frame_id or self.frame_id < 0:
            raise InvalidValue(f"frame_id must be a non-negative integer, got {self.frame_id!r}")
        object.__setattr__(self, "frame_id", int(self.frame_id))
        score = float(self.score)
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            raise InvalidValue(f"score must lie in [0, 1], got {score!r}")
        object.__setattr__(self, "score", score)
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            if emb.ndim != 1 or emb.size == 0 or not np.all(np.isfinite(emb)):
                raise InvalidValue("embedding must be a finite, non-empty 1-D vector")
            object.__setattr__(self, "embedding", _readonly(emb))
        for name in ("gt_class", "gt_track"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, int(v))


class TrackStatus(Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    DEAD = "dead"


@dataclass(frozen=True)
class TrackEntry:
    """One matched observation along a track."""

    frame_id: int
    bbox: BoundingBox
    dist: ClassDistribution


@dataclass(frozen=True, eq=False)
class Track:
    """An identity's trajectory with its running log-probability accumulator.

    ``cum_log`` is the per-class sum of log probabilities over all entries;
    construction re-checks it against the entries to 1e-9 per component.
    """

    id: int
    entries: Tuple[TrackEntry, ...]
    cum_log: np.ndarray
    status: TrackStatus
    hits: int
    age_since_update: int
    motion: Optional["KalmanState"] = None
    last_embedding: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.id < 1:
            raise InvalidValue(f"track id must be a positive integer, got {self.id!r}")
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        frames = [e.frame_id for e in entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise InvalidValue(f"track {self.id}: entry frame ids must be strictly increasing")
        cum = np.asarray(self.cum_log, dtype=float)
        if entries:
            expected = np.sum([e.dist.log() for e in entries], axis=0)
            if cum.shape != expected.shape or np.max(np.abs(cum - expected)) > 1e-9:
                raise InvalidValue(f"track {self.id}: cum_log disagrees with entries")
        object.__setattr__(self, "cum_log", _readonly(cum))
        if self.last_embedding is not None:
            emb = np.asarray(self.last_embedding, dtype=float)
            object.__setattr__(self, "last_embedding", _readonly(emb))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def frame_ids(self) -> Tuple[int, ...]:
        return tuple(e.frame_id for e in self.entries)


@dataclass(frozen=True, eq=False)
class DetectionLabel:
    """Per-detection outcome: assignment plus raw and fused class labels."""

    frame_id: int
    detection: Detection
    track_id: Optional[int]
    raw_label: int
    fused_label: int


@dataclass(frozen=True, eq=False)
class SequenceResult:
    """Everything a tracker run produces for one sequence: tracks + per-detection labels."""

    tracks: Tuple[Track, ...]
    per_frame: Tuple[DetectionLabel, ...]

    def __post_init__(self):
        tracks = tuple(self.tracks)
        per_frame = tuple(self.per_frame)
        object.__setattr__(self, "tracks", tracks)
        object.__setattr__(self, "per_frame", per_frame)
        ids = [t.id for t in tracks]
        if len(set(ids)) != len(ids):
            raise InvalidValue("track ids must be unique within a sequence result")
        known = set(ids)
        for rec in per_frame:
            if rec.track_id is not None and rec.track_id not in known:
                raise InvalidValue(f"per-frame record references unknown track {rec.track_id}")
            if rec.raw_label != rec.detection.dist.argmax:
                raise InvalidValue("raw_label must equal the detection's argmax")

    def track_by_id(self, track_id: int) -> Track:
        for t in self.tracks:
            if t.id == track_id:
                return t
        raise KeyError(track_id)
