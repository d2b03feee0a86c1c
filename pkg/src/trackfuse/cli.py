"""Command-line surface: synth | simulate | track | eval | bench.

Exit codes: 0 success, 1 usage error, 2 data error.  Runs are deterministic:
identical arguments and input files produce byte-identical outputs.  The
``TRACKFUSE_THREADS`` environment variable caps per-sequence parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional

from . import io
from .bench import run_timing_bench
from .camtrap import TriggerConfig, simulate_triggers
from .errors import EmptyEvaluation, InvalidConfig, ParseError, TrackfuseError
from .fusion import FusionMode, relabel
from .metrics import (
    accuracy_at_1,
    confusion,
    evaluation_pairs,
    f1_scores,
    format_profile_table,
    label_flip_rate,
)
from .model import LabelSet, SequenceResult
from .synth import ScenarioConfig, generate_scenario
from .trackers import TrackerConfig, TrackerKind, run_sequence

TRACKER_NAMES = [k.value for k in TrackerKind]
FUSION_NAMES = [m.value for m in FusionMode]


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with code 1 (2 is for data errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trackfuse",
                     description="Track detections and fuse per-track class probabilities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic detection file")
    p.add_argument("--output", required=True, help="detections JSONL to write")
    p.add_argument("--labels-out", help="label list to write (one name per line)")
    p.add_argument("--seq-name", default="synth-000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objects", type=int, default=5)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--flicker", type=float, default=0.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--confidence", type=float, default=0.8)
    p.add_argument("--image-size", type=int, nargs=2, default=(1024, 1024),
                   metavar=("W", "H"))
    p.add_argument("--embedding-dim", type=int, default=16)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("simulate", help="apply camera-trap burst sampling to a detection file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--fps", type=int, default=30)
    p.add_argument("--burst", type=int, default=4)
    p.add_argument("--cooldown", type=float, default=10.0)
    p.add_argument("--track-across-bursts", action="store_true",
                   help="keep each source sequence intact instead of one sequence per burst")
    p.set_defaults(func=_cmd_simulate)

    for name, needs_output in (("track", True), ("eval", False)):
        p = sub.add_parser(name, help="run a tracker and fuse labels"
                           if needs_output else "run a tracker and report metrics")
        p.add_argument("--input", required=True, help="detections JSONL")
        p.add_argument("--labels", required=True, help="label list file")
        p.add_argument("--tracker", choices=TRACKER_NAMES, default="sort")
        p.add_argument("--fusion", choices=FUSION_NAMES, default="prob")
        p.add_argument("--config", help="JSON file with TrackerConfig/TriggerConfig fields")
        p.add_argument("--online", action="store_true",
                       help="labels at frame t use entries up to t only")
        p.add_argument("--matched-only", action="store_true",
                       help="exclude unmatched detections from metrics")
        _add_config_overrides(p)
        if needs_output:
            p.add_argument("--output", required=True, help="track CSV to write")
            p.add_argument("--metrics-out", help="metrics JSON to write (needs ground truth)")
            p.set_defaults(func=_cmd_track)
        else:
            p.add_argument("--per-class", action="store_true")
            p.add_argument("--flip-rate", action="store_true")
            p.add_argument("--json-out", help="metrics JSON to write")
            p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="profile per-stage timing for each tracker")
    p.add_argument("--input", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--trackers", default=",".join(TRACKER_NAMES),
                   help="comma-separated tracker names")
    p.add_argument("--fusion", choices=FUSION_NAMES, default="prob")
    p.add_argument("--json-out", help="profile JSON to write")
    p.set_defaults(func=_cmd_bench)
    return parser


_OVERRIDE_FIELDS = {
    "iou_gate": float, "centroid_gate": float,
    "det_threshold_high": float, "det_threshold_low": float,
    "min_hits": int, "max_age": int,
    "appearance_weight": float, "cosine_gate": float,
}


def _add_config_overrides(p: argparse.ArgumentParser) -> None:
    for field_name, typ in _OVERRIDE_FIELDS.items():
        p.add_argument(f"--{field_name.replace('_', '-')}", type=typ, default=None,
                       dest=f"cfg_{field_name}", help=argparse.SUPPRESS)


def _tracker_config(args) -> TrackerConfig:
    data: Dict[str, object] = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.lineno, f"config file: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise InvalidConfig("config file must hold a JSON object")
        known = set(_OVERRIDE_FIELDS) | {"kind", "motion", "fps", "burst_len", "cooldown"}
        unknown = set(file_cfg) - known
        if unknown:
            raise InvalidConfig(f"unknown config fields: {sorted(unknown)}")
        data.update({k: v for k, v in file_cfg.items()
                     if k in set(_OVERRIDE_FIELDS) | {"kind", "motion"}})
    data["kind"] = TrackerKind(args.tracker)  # CLI flag wins over the file
    for field_name in _OVERRIDE_FIELDS:
        value = getattr(args, f"cfg_{field_name}")
        if value is not None:
            data[field_name] = value
    return TrackerConfig.from_dict(data)


def _thread_count(n_tasks: int) -> int:
    env = os.environ.get("TRACKFUSE_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise InvalidConfig(f"TRACKFUSE_THREADS must be an integer, got {env!r}") from None
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _run_all(sequences: io.Sequences, config: TrackerConfig,
             mode: FusionMode, online: bool) -> Dict[str, SequenceResult]:
    """Track and relabel every sequence; sequences fan out across threads."""
    names = sorted(sequences)

    def one(seq: str) -> SequenceResult:
        return relabel(run_sequence(sequences[seq], config), mode, online=online)

    workers = _thread_count(len(names))
    if workers <= 1:
        return {seq: one(seq) for seq in names}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        done = pool.map(one, names)
        return dict(zip(names, done))


def _cmd_synth(args) -> int:
    config = ScenarioConfig(
        seed=args.seed, num_objects=args.objects, num_frames=args.frames,
        n_classes=args.classes, flicker=args.flicker, dropout=args.dropout,
        jitter=args.jitter, confidence=args.confidence,
        image_size=tuple(args.image_size), embedding_dim=args.embedding_dim,
    )
    scenario = generate_scenario(config)
    io.write_detections({args.seq_name: scenario.detection_frames()}, args.output)
    if args.labels_out:
        io.write_labels(scenario.label_set, args.labels_out)
    return 0


def _cmd_simulate(args) -> int:
    config = TriggerConfig(fps=args.fps, burst_len=args.burst, cooldown=args.cooldown)
    records: Dict[str, List[dict]] = {}
    count = 0
    with open(args.input, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            count += 1
            try:
                record = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from None
            if not isinstance(record, dict) or "seq" not in record or "frame" not in record:
                raise ParseError(line_no, "record needs 'seq' and 'frame' fields")
            records.setdefault(str(record["seq"]), []).append(record)
    if count == 0:
        raise io.EmptyFile(f"detection file {args.input} contains no records")

    with open(args.output, "w", encoding="utf-8") as out:
        for seq in sorted(records):
            recs = records[seq]
            total = max(int(r["frame"]) for r in recs) + 1
            presence = [False] * total
            for r in recs:
                presence[int(r["frame"])] = True
            bursts = simulate_triggers(total, presence, config)
            by_frame: Dict[int, List[dict]] = {}
            for r in recs:
                by_frame.setdefault(int(r["frame"]), []).append(r)
            for b_idx, burst in enumerate(bursts):
                for frame in burst.frame_ids:
                    for r in by_frame.get(frame, []):
                        if not args.track_across_bursts:
                            r = dict(r)
                            r["seq"] = f"{seq}#b{b_idx:04d}"
                        out.write(json.dumps(r) + "\n")
    return 0


def _metrics_report(results: Dict[str, SequenceResult], label_set: LabelSet,
                    include_unmatched: bool, with_flip_rate: bool,
                    with_per_class: bool) -> dict:
    report: Dict[str, object] = {}
    fused_cm = None
    for key, use_fused in (("raw", False), ("fused", True)):
        pairs = evaluation_pairs(results, use_fused, include_unmatched)
        if not pairs:
            raise EmptyEvaluation("no detections carry gt_class; nothing to evaluate")
        cm = confusion(pairs, len(label_set))
        scores = f1_scores(cm)
        report[key] = {
            "acc1": accuracy_at_1(cm),
            "f1_macro": scores.macro,
            "f1_weighted": scores.weighted,
        }
        if use_fused:
            fused_cm = cm
    report["n_evaluated"] = len(evaluation_pairs(results, True, include_unmatched))
    report["n_matched"] = sum(
        1 for res in results.values() for rec in res.per_frame if rec.track_id is not None
    )
    if with_flip_rate:
        merged_raw = [label_flip_rate(res, use_fused=False) for res in results.values()
                      if _has_flippable(res)]
        merged_fused = [label_flip_rate(res, use_fused=True) for res in results.values()
                        if _has_flippable(res)]
        report["flip_rate"] = {
            "raw": sum(merged_raw) / len(merged_raw) if merged_raw else 0.0,
            "fused": sum(merged_fused) / len(merged_fused) if merged_fused else 0.0,
        }
    if with_per_class:
        scores = f1_scores(fused_cm)
        support = fused_cm.counts.sum(axis=1)
        report["per_class"] = [
            {"label": label_set[i], "f1": float(scores.per_class[i]), "support": int(support[i])}
            for i in range(len(label_set))
        ]
    return report


def _has_flippable(result: SequenceResult) -> bool:
    seen: Dict[int, int] = {}
    for rec in result.per_frame:
        if rec.track_id is not None:
            seen[rec.track_id] = seen.get(rec.track_id, 0) + 1
            if seen[rec.track_id] >= 2:
                return True
    return False


def _print_report(report: dict) -> None:
    print(f"{'':<8}{'Acc@1':>10}{'F1-macro':>12}{'F1-weighted':>14}")
    for key in ("raw", "fused"):
        block = report[key]
        print(f"{key:<8}{block['acc1']:>10.4f}{block['f1_macro']:>12.4f}"
              f"{block['f1_weighted']:>14.4f}")
    if "flip_rate" in report:
        fr = report["flip_rate"]
        print(f"flip rate: raw {fr['raw']:.4f}  fused {fr['fused']:.4f}")
    if "per_class" in report:
        print(f"{'label':<16}{'F1':>10}{'support':>10}")
        for row in report["per_class"]:
            print(f"{row['label']:<16}{row['f1']:>10.4f}{row['support']:>10}")


def _cmd_track(args) -> int:
    label_set = io.read_labels(args.labels)
    sequences = io.parse_detections(args.input, label_set)
    config = _tracker_config(args)
    results = _run_all(sequences, config, FusionMode(args.fusion), args.online)
    io.write_tracks(results, args.output)
    if args.metrics_out:
        report = _metrics_report(results, label_set,
                                 include_unmatched=not args.matched_only,
                                 with_flip_rate=True, with_per_class=False)
        with open(args.metrics_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_eval(args) -> int:
    label_set = io.read_labels(args.labels)
    sequences = io.parse_detections(args.input, label_set)
    config = _tracker_config(args)
    results = _run_all(sequences, config, FusionMode(args.fusion), args.online)
    report = _metrics_report(results, label_set,
                             include_unmatched=not args.matched_only,
                             with_flip_rate=args.flip_rate,
                             with_per_class=args.per_class)
    _print_report(report)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_bench(args) -> int:
    label_set = io.read_labels(args.labels)
    try:
        kinds = [TrackerKind(name.strip()) for name in args.trackers.split(",") if name.strip()]
    except ValueError as exc:
        raise InvalidConfig(f"unknown tracker in --trackers: {exc}") from None
    profiles, samples = run_timing_bench(args.input, label_set, kinds,
                                         FusionMode(args.fusion))
    print(f"samples: {samples}")
    print(format_profile_table(profiles))
    if args.json_out:
        payload = {
            name: {"samples": p.samples, "total_ms": dict(sorted(p.total_ms.items()))}
            for name, p in profiles.items()
        }
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except TrackfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
