"""Deterministic synthetic scenarios: moving boxes, noisy detections, flicker.

Objects move linearly and reflect off the image borders.  Each frame, each
object yields a detection with probability 1 - dropout; boxes get Gaussian
center jitter, scores are uniform in ``score_range``, and the class
distribution is drawn from a symmetric flicker model: with probability
1 - flicker the mass ``confidence`` sits on the true class, otherwise on a
uniformly chosen wrong class, the remainder spread evenly.  Everything is a
pure function of (config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidConfig
from .model import BoundingBox, ClassDistribution, Detection, LabelSet, validate_distribution


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    num_objects: int = 5
    num_frames: int = 100
    image_size: Tuple[int, int] = (1024, 1024)
    n_classes: int = 10
    velocities: Optional[Tuple[Tuple[float, float], ...]] = None  # px/frame, else sampled
    start_centers: Optional[Tuple[Tuple[float, float], ...]] = None  # px, else sampled
    speed_range: Tuple[float, float] = (1.0, 5.0)
    size_range: Tuple[float, float] = (24.0, 64.0)
    dropout: float = 0.0
    jitter: float = 0.0  # px, Gaussian center noise
    flicker: float = 0.0
    confidence: float = 0.8  # mass placed on the drawn class
    embedding_dim: int = 16
    embedding_separation: float = 8.0
    score_range: Tuple[float, float] = (0.55, 1.0)

    def __post_init__(self):
        if self.num_objects < 1 or self.num_frames < 1:
            raise InvalidConfig("need at least one object and one frame")
        if self.n_classes < 2:
            raise InvalidConfig("need at least two classes")
        w, h = self.image_size
        if w < 1 or h < 1:
            raise InvalidConfig(f"bad image size {self.image_size!r}")
        lo, hi = self.size_range
        if not (0.0 < lo <= hi) or hi >= min(w, h) / 2.0:
            raise InvalidConfig(f"bad size range {self.size_range!r} for image {self.image_size!r}")
        if not (0.0 <= self.dropout < 1.0):
            raise InvalidConfig("dropout must lie in [0, 1)")
        if not (0.0 <= self.flicker < 1.0):
            raise InvalidConfig("flicker must lie in [0, 1)")
        if self.jitter < 0.0:
            raise InvalidConfig("jitter must be >= 0")
        if not (1.0 / self.n_classes < self.confidence <= 1.0):
            raise InvalidConfig("confidence must exceed 1/n_classes and not exceed 1")
        s_lo, s_hi = self.speed_range
        if not (0.0 <= s_lo <= s_hi):
            raise InvalidConfig(f"bad speed range {self.speed_range!r}")
        r_lo, r_hi = self.score_range
        if not (0.0 <= r_lo <= r_hi <= 1.0):
            raise InvalidConfig(f"bad score range {self.score_range!r}")
        if self.embedding_dim < 0:
            raise InvalidConfig("embedding_dim must be >= 0")
        if self.embedding_separation <= 0.0:
            raise InvalidConfig("embedding_separation must be > 0")
        if self.velocities is not None:
            vel = tuple((float(vx), float(vy)) for vx, vy in self.velocities)
            if len(vel) != self.num_objects:
                raise InvalidConfig("velocities must list one (vx, vy) per object")
            object.__setattr__(self, "velocities", vel)
        if self.start_centers is not None:
            pos = tuple((float(cx), float(cy)) for cx, cy in self.start_centers)
            if len(pos) != self.num_objects:
                raise InvalidConfig("start_centers must list one (cx, cy) per object")
            object.__setattr__(self, "start_centers", pos)


@dataclass(frozen=True)
class TruthBox:
    """Ground-truth state of one object in one frame."""

    bbox: BoundingBox
    class_id: int
    track_id: int


@dataclass(frozen=True, eq=False)
class Scenario:
    config: ScenarioConfig
    label_set: LabelSet
    ground_truth: Tuple[Tuple[TruthBox, ...], ...]
    detections: Tuple[Tuple[Detection, ...], ...]

    def detection_frames(self) -> List[Tuple[int, List[Detection]]]:
        """Per-frame detection lists in tracker input form."""
        return [(f, list(dets)) for f, dets in enumerate(self.detections)]

    def presence(self) -> np.ndarray:
        """Per-frame flag: any ground-truth object visible."""
        return np.array([len(frame) > 0 for frame in self.ground_truth], dtype=bool)


def corrupt_distribution(true_class: int, config: ScenarioConfig,
                         rng: np.random.Generator) -> ClassDistribution:
    """Flicker model: confidence mass on the true class, or on a random wrong one."""
    n = config.n_classes
    if not 0 <= true_class < n:
        raise InvalidConfig(f"true_class {true_class} outside [0, {n})")
    target = true_class
    if rng.random() < config.flicker:
        wrong = int(rng.integers(0, n - 1))
        target = wrong + (wrong >= true_class)
    probs = np.full(n, (1.0 - config.confidence) / (n - 1))
    probs[target] = config.confidence
    return validate_distribution(probs, n)


def _bounce(pos: float, vel: float, lo: float, hi: float) -> Tuple[float, float]:
    pos += vel
    while pos < lo or pos > hi:
        if pos < lo:
            pos = 2.0 * lo - pos
        else:
            pos = 2.0 * hi - pos
        vel = -vel
    return pos, vel


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Build the full scenario for (config, seed); same inputs give identical output."""
    rng = np.random.default_rng(config.seed)
    img_w, img_h = config.image_size
    n = config.num_objects

    sizes = rng.uniform(config.size_range[0], config.size_range[1], size=(n, 2))
    classes = rng.integers(0, config.n_classes, size=n)
    if config.velocities is not None:
        vel = np.array(config.velocities, dtype=float)
    else:
        speed = rng.uniform(config.speed_range[0], config.speed_range[1], size=n)
        angle = rng.uniform(0.0, 2.0 * math.pi, size=n)
        vel = np.stack([speed * np.cos(angle), speed * np.sin(angle)], axis=1)
    if config.start_centers is not None:
        centers = np.array(config.start_centers, dtype=float)
    else:
        centers = np.stack([
            rng.uniform(sizes[:, 0] / 2.0, img_w - sizes[:, 0] / 2.0),
            rng.uniform(sizes[:, 1] / 2.0, img_h - sizes[:, 1] / 2.0),
        ], axis=1)

    protos = None
    if config.embedding_dim > 0:
        protos = rng.normal(size=(n, config.embedding_dim))
        protos /= np.linalg.norm(protos, axis=1, keepdims=True)
        protos *= config.embedding_separation

    ground_truth: List[Tuple[TruthBox, ...]] = []
    detections: List[Tuple[Detection, ...]] = []
    for frame_id in range(config.num_frames):
        truth_frame = []
        det_frame = []
        for k in range(n):
            w, h = sizes[k]
            if frame_id > 0:
                centers[k, 0], vel[k, 0] = _bounce(centers[k, 0], vel[k, 0], w / 2.0, img_w - w / 2.0)
                centers[k, 1], vel[k, 1] = _bounce(centers[k, 1], vel[k, 1], h / 2.0, img_h - h / 2.0)
            cx, cy = centers[k]
            gt_box = BoundingBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
            truth_frame.append(TruthBox(gt_box, int(classes[k]), k + 1))

            if rng.random() < config.dropout:
                continue
            jx, jy = rng.normal(0.0, config.jitter, size=2) if config.jitter > 0 else (0.0, 0.0)
            det_box = BoundingBox(
                gt_box.x1 + jx, gt_box.y1 + jy, gt_box.x2 + jx, gt_box.y2 + jy
            )
            score = float(rng.uniform(config.score_range[0], config.score_range[1]))
            dist = corrupt_distribution(int(classes[k]), config, rng)
            emb = None
            if protos is not None:
                emb = protos[k] + rng.normal(size=config.embedding_dim)
            det_frame.append(Detection(
                frame_id=frame_id, bbox=det_box, score=score, dist=dist,
                embedding=emb, gt_class=int(classes[k]), gt_track=k + 1,
            ))
        ground_truth.append(tuple(truth_frame))
        detections.append(tuple(det_frame))

    names = [f"class_{i:02d}" for i in range(config.n_classes)]
    return Scenario(
        config=config,
        label_set=LabelSet(names),
        ground_truth=tuple(ground_truth),
        detections=tuple(detections),
    )
