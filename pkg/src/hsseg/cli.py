"""Command-line entry point: ``hsseg {gen,learn,segment,eval,sweep}``.

Exit status is 0 on success, 2 when the input fails validation and 1 on any
other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import learn, mixlet, plugin
from .divergence import metric_report
from .errors import ConfigError, FormatError, HssegError
from .experiment import parse_config, run_sweep, thread_count, write_sweep
from .io import (
    read_cube,
    read_json,
    read_labels,
    read_model,
    read_training_set,
    write_cube,
    write_json,
    write_labels,
    write_model,
    write_training_set,
    write_weights,
)
from .synth import make_weight_field, sample_cube, sample_training_set

log = logging.getLogger("hsseg")


def _load_config(path):
    try:
        return parse_config(read_json(path))
    except FormatError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    scene = cfg.scene_spec(seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    wf = make_weight_field(scene)
    cube, labels = sample_cube(wf, cfg.signal, seed)
    write_cube(out / "cube.hsc", cube)
    write_labels(out / "truth_labels.csv", labels)
    write_weights(out / "truth_weights.csv", wf)
    sidecar = {"scene": scene.to_dict(), "signal": cfg.signal.to_dict(), "seed": seed}
    if cfg.train_counts is not None:
        ts = sample_training_set(cfg.signal, cfg.train_counts, seed)
        write_training_set(out / "train.csv", ts)
        sidecar["train"] = {"counts": cfg.train_counts}
    write_json(out / "spec.json", sidecar)
    log.info("wrote %s", out)
    return 0


def cmd_learn(args) -> int:
    src = Path(args.train)
    if src.is_dir():
        src = src / "train.csv"
    model = learn.fit(read_training_set(src))
    write_model(args.out, model)
    log.info("support size %d, threshold %.6g", model.support.size, model.threshold_used)
    return 0


def cmd_segment(args) -> int:
    cube = read_cube(args.cube)
    model = read_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    fit = mixlet.fit(cube, model, exact_scan=args.exact_scan, penalty_scale=args.penalty_scale)
    labels = plugin.decide(cube, model, fit.weights)
    elapsed = time.perf_counter() - start
    write_weights(out / "weights.csv", fit.weights)
    write_labels(out / "labels.csv", labels)
    report = fit.to_dict()
    report["timing_s"] = elapsed
    write_json(out / "fit.json", report)
    return 0


def cmd_eval(args) -> int:
    files = [args.pred, args.truth] + ([args.oracle] if args.oracle else [])
    maps = [read_labels(f) for f in files]
    K = max(m.K for m in maps)
    pred, truth, *rest = [read_labels(f, K=K) for f in files]
    report = metric_report(pred, truth).to_dict()
    if rest:
        report["excess_risk"] = plugin.excess_risk(pred, rest[0], truth)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    results = run_sweep(cfg, thread_count(args.threads))
    summary = write_sweep(Path(args.out), cfg, results)
    write_json(Path(args.out) / "summary.json", summary)
    print(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsseg", description="Plug-in hyperspectral segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic scene")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("learn", help="fit class densities from a training CSV")
    p.add_argument("train", help="train.csv or a directory containing it")
    p.add_argument("--out", required=True, help="model JSON to write")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("segment", help="estimate weights and label a cube")
    p.add_argument("cube")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--exact-scan", action="store_true", help="scan every grid weight per cell")
    p.add_argument("--penalty-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="compare label maps")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--oracle")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a seeded convergence sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except HssegError as exc:
        print(f"hsseg: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"hsseg: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
