"""Command-line entry point: ``motionref {simulate,describe,run,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import MotionRefError
from .io import (
    read_boxes,
    read_info,
    read_predictions,
    sidecar_path,
    write_descriptions,
    write_predictions,
)
from .metrics import EvalFrameSet, evaluate
from .pipeline import SessionConfig, describe_sequence, run_pipeline
from .scenario import Scenario, generate_scenario, write_scenario

log = logging.getLogger("motionref")


def _load_json(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _session_config(args) -> SessionConfig:
    raw = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    return SessionConfig.from_dict(raw)


def _info_for(args):
    return read_info(args.info or sidecar_path(args.trajectories))


def cmd_simulate(args) -> int:
    raw = _load_json(args.config)
    seed = args.seed if args.seed is not None else raw.pop("seed", 0)
    raw.pop("seed", None)
    gen = generate_scenario(Scenario.from_dict(raw), seed=seed)
    paths = write_scenario(gen, args.out)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_describe(args) -> int:
    cfg = _session_config(args)
    rows = describe_sequence(read_boxes(args.trajectories), _info_for(args), cfg.memory_capacity)
    write_descriptions(args.out, rows)
    return 0


def cmd_run(args) -> int:
    cfg = _session_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_pipeline(read_boxes(args.trajectories), _info_for(args), cfg, reference=args.reference)
    write_predictions(out_dir / "predictions.csv", result.predictions)
    write_descriptions(out_dir / "descriptions.csv", result.descriptions)
    return 0


def evaluate_files(gt_path, pred_path, iou_threshold: float = 0.5) -> dict:
    """Metric report for a ground-truth CSV and a prediction CSV, 4 decimals."""
    gt = read_boxes(gt_path)
    preds = read_predictions(pred_path)
    e = EvalFrameSet(iou_threshold=iou_threshold)
    for o in gt:
        if o.box.is_valid:
            e.gt.setdefault(o.frame, []).append((o.id, o.box))
    for p in preds:
        e.pred.setdefault(p.frame, []).append((p.id, p.refined_box))
    e.__post_init__()
    return {k: round(v, 4) for k, v in evaluate(e).items()}


def cmd_eval(args) -> int:
    raw = _load_json(args.config)
    report = evaluate_files(args.gt, args.pred, raw.get("iou_threshold", 0.5))
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motionref", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")

    sp = sub.add_parser("simulate", help="generate a synthetic scenario")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("describe", help="write motion descriptions for a trajectory file")
    common(sp)
    sp.add_argument("--trajectories", required=True)
    sp.add_argument("--info", help="sidecar JSON (default: trajectory path with .json)")
    sp.add_argument("--out", required=True, help="description CSV to write")
    sp.set_defaults(func=cmd_describe)

    sp = sub.add_parser("run", help="run the tracking pipeline")
    common(sp)
    sp.add_argument("--trajectories", required=True)
    sp.add_argument("--info")
    sp.add_argument("--reference", help="reference expression (default: from sidecar)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("eval", help="score predictions against ground truth")
    common(sp)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--out", help="report JSON (default: stdout)")
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MotionRefError, FileNotFoundError, KeyError) as exc:
        print(f"motionref {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
