"""Timing benchmark: run each tracker over a detection file and profile stages.

Ingest stages are timed once and shared across methods (they do not depend on
the tracker), mirroring how per-sample cost breaks down in practice: detection
and classification dominate, association adds a small per-method overhead, and
appearance-based association pays extra for its embedding costs.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, Optional, Sequence, Tuple

from . import io
from .fusion import FusionMode, relabel
from .metrics import (
    STAGE_FUSION,
    STAGE_METRICS,
    STAGE_MOT,
    StageTimer,
    TimingProfile,
    accuracy_at_1,
    confusion,
    evaluation_pairs,
    f1_scores,
    profile,
)
from .model import LabelSet
from .trackers import TrackerConfig, TrackerKind, run_sequence


def run_timing_bench(path, label_set: LabelSet,
                     kinds: Sequence[TrackerKind] = tuple(TrackerKind),
                     fusion_mode: FusionMode = FusionMode.PROBABILITY,
                     base_config: Optional[TrackerConfig] = None,
                     ) -> Tuple[Dict[str, TimingProfile], int]:
    """Profile each tracker kind over one detection file.

    Returns per-kind profiles plus the sample count (frames with detections).
    """
    ingest_timer = StageTimer()
    sequences = io.parse_detections(path, label_set, timer=ingest_timer)
    samples = sum(len(frames) for frames in sequences.values())

    has_embeddings = all(
        det.embedding is not None
        for frames in sequences.values()
        for _, dets in frames
        for det in dets
    )
    if not has_embeddings:
        # Appearance association is meaningless without embeddings; skip it.
        kinds = [k for k in kinds if k is not TrackerKind.APPEARANCE]

    profiles: Dict[str, TimingProfile] = {}
    for kind in kinds:
        timer = StageTimer()
        timer.merge(ingest_timer)
        config = replace(base_config, kind=kind) if base_config else TrackerConfig(kind=kind)
        results = {}
        for seq in sorted(sequences):
            with timer.stage(STAGE_MOT):
                result = run_sequence(sequences[seq], config, timer=timer)
            with timer.stage(STAGE_FUSION):
                results[seq] = relabel(result, fusion_mode)
        with timer.stage(STAGE_METRICS):
            pairs = evaluation_pairs(results, use_fused=True)
            if pairs:
                cm = confusion(pairs, len(label_set))
                accuracy_at_1(cm)
                f1_scores(cm)
        profiles[kind.value] = profile(timer, samples)
    return profiles, samples
