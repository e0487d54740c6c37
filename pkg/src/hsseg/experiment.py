"""Experiment configuration and the gen -> learn -> segment -> eval pipeline.

A config is a JSON object::

    {
      "schema": 1,
      "seed": 0,
      "scene": {"d": 2, "side": 16, "K": 2, "kind": "boundary-fragment",
                "mixing": "soft", "soft": [0.75, 0.75], "lipschitz": 1.0},
      "signal": {"p": 64, "p0": 4, "separation": 2.0, "var": 1.0},
      "train": {"counts": [50, 50]},
      "oracle_densities": false,
      "sweep": {"axis": "N", "values": [256, 1024]},
      "seeds": [0, 1, 2]
    }

``train`` and ``sweep`` are optional. The scene seed defaults to the run seed.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import learn, mixlet, plugin
from .core import GridGeometry
from .divergence import hamming
from .errors import ConfigError, HssegError
from .io import write_labels
from .synth import SceneSpec, SignalSpec, make_weight_field, sample_cube, sample_training_set

SCHEMA_VERSION = 1
SWEEP_AXES = ("N", "n", "p")
SWEEP_COLUMNS = ("axis_value", "seed", "hamming", "excess_risk", "leaf_count", "support_size", "runtime_s")


@dataclass
class ExperimentConfig:
    scene: dict
    signal: SignalSpec
    train_counts: list[int] | None = None
    seed: int = 0
    seeds: list[int] = field(default_factory=lambda: [0])
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)
    oracle_densities: bool = False

    def scene_spec(self, seed: int | None = None, side: int | None = None) -> SceneSpec:
        obj = dict(self.scene)
        if "geom" in obj:
            g = obj.pop("geom")
            obj.setdefault("d", g["d"])
            obj.setdefault("side", g["side"])
        if side is not None:
            obj["side"] = side
        obj.setdefault("seed", self.seed if seed is None else seed)
        try:
            return SceneSpec.from_dict(obj)
        except TypeError as exc:
            raise ConfigError(f"bad scene section: {exc}") from exc


def parse_config(obj: dict) -> ExperimentConfig:
    """Validate a decoded config document; every problem surfaces as ConfigError."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    if obj.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {obj.get('schema')!r}; expected {SCHEMA_VERSION}")
    try:
        scene = dict(obj["scene"])
        signal = SignalSpec.from_dict(obj["signal"])
    except KeyError as exc:
        raise ConfigError(f"config is missing section {exc}") from exc
    except (HssegError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad signal section: {exc}") from exc
    sweep = obj.get("sweep") or {}
    axis = sweep.get("axis")
    if axis is not None and axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    seeds = [int(s) for s in obj.get("seeds", [obj.get("seed", 0)])]
    if not seeds:
        raise ConfigError("seeds must be non-empty")
    counts = obj.get("train", {}).get("counts") if obj.get("train") else None
    cfg = ExperimentConfig(
        scene=scene,
        signal=signal,
        train_counts=[int(c) for c in counts] if counts is not None else None,
        seed=int(obj.get("seed", 0)),
        seeds=seeds,
        sweep_axis=axis,
        sweep_values=list(sweep.get("values", [])),
        oracle_densities=bool(obj.get("oracle_densities", False)),
    )
    try:
        cfg.scene_spec()
    except ConfigError:
        raise
    except HssegError as exc:
        raise ConfigError(f"bad scene section: {exc}") from exc
    if axis is not None and not cfg.sweep_values:
        raise ConfigError("sweep needs a non-empty list of values")
    if axis not in (None, "n") and cfg.train_counts is None and not cfg.oracle_densities:
        raise ConfigError("sweeps need a train section unless oracle_densities is true")
    return cfg


def split_counts(n: int, K: int) -> list[int]:
    base, extra = divmod(int(n), K)
    return [base + (1 if k < extra else 0) for k in range(K)]


@dataclass
class CellResult:
    axis_value: float
    seed: int
    hamming: float
    excess_risk: float
    leaf_count: int
    support_size: int
    runtime_s: float
    labels: dict = field(default_factory=dict, repr=False)

    def row(self) -> list[str]:
        return [
            _fmt(self.axis_value), str(self.seed), repr(self.hamming), repr(self.excess_risk),
            str(self.leaf_count), str(self.support_size), f"{self.runtime_s:.6f}",
        ]


def _fmt(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def run_cell(cfg: ExperimentConfig, axis_value=None, seed: int = 0) -> CellResult:
    """One gen -> learn -> segment -> eval pass at one sweep point."""
    start = time.perf_counter()
    axis = cfg.sweep_axis
    side = None
    signal = cfg.signal
    counts = cfg.train_counts
    if axis == "N":
        d = cfg.scene_spec(seed).geom.d
        side = GridGeometry.from_pixel_count(int(axis_value), d).side
    elif axis == "p":
        signal = SignalSpec(int(axis_value), signal.p0, signal.separation, signal.var)
    elif axis == "n":
        counts = split_counts(int(axis_value), int(cfg.scene.get("K", 2)))

    scene = cfg.scene_spec(seed, side)
    truth_w = make_weight_field(scene)
    cube, truth = sample_cube(truth_w, signal, seed)
    true_model = signal.true_model(scene.K)
    if cfg.oracle_densities:
        model = true_model
    else:
        model = learn.fit(sample_training_set(signal, counts, seed))
    fit = mixlet.fit(cube, model)
    pred = plugin.decide(cube, model, fit.weights)
    oracle = plugin.oracle_decide(cube, true_model, truth_w)
    return CellResult(
        axis_value=axis_value if axis_value is not None else 0,
        seed=seed,
        hamming=hamming(pred, truth),
        excess_risk=plugin.excess_risk(pred, oracle, truth),
        leaf_count=fit.leaf_count,
        support_size=int(model.support.size),
        runtime_s=time.perf_counter() - start,
        labels={"pred": pred, "truth": truth, "oracle": oracle},
    )


def _run_cell_args(args):
    return run_cell(*args)


def loglog_slope(x, y) -> float | None:
    """Least-squares slope of ``log y`` on ``log x``; None unless all y > 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.any(y <= 0) or np.any(x <= 0):
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def summarize(cfg: ExperimentConfig, results: list[CellResult]) -> dict:
    values = sorted({r.axis_value for r in results})
    per = []
    for v in values:
        rs = [r for r in results if r.axis_value == v]
        per.append({
            "axis_value": v,
            "median_hamming": float(np.median([r.hamming for r in rs])),
            "median_excess_risk": float(np.median([r.excess_risk for r in rs])),
            "median_leaf_count": float(np.median([r.leaf_count for r in rs])),
            "n_seeds": len(rs),
        })
    ex = [p["median_excess_risk"] for p in per]
    summary = {
        "axis": cfg.sweep_axis,
        "per_value": per,
        "slope_excess_vs_axis": loglog_slope(values, ex),
        "slope_hamming_vs_axis": loglog_slope(values, [p["median_hamming"] for p in per]),
    }
    if cfg.sweep_axis == "N":
        rate = [math.log(v) / v for v in values]
        summary["slope_excess_vs_logN_over_N"] = loglog_slope(rate, ex)
    return summary


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[CellResult]:
    values = cfg.sweep_values if cfg.sweep_axis else [None]
    jobs = [(cfg, v, s) for v in sorted(values, key=lambda v: (v is not None, v)) for s in sorted(cfg.seeds)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_cell_args, jobs))
    return [run_cell(*job) for job in jobs]


def sweep_csv(results: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def cell_dir(out: Path, axis: str | None, r: CellResult) -> Path:
    return out / "cells" / f"{axis or 'value'}={_fmt(r.axis_value)}" / f"seed={r.seed}"


def write_sweep(out: Path, cfg: ExperimentConfig, results: list[CellResult]) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        d = cell_dir(out, cfg.sweep_axis, r)
        d.mkdir(parents=True, exist_ok=True)
        for name, lm in r.labels.items():
            write_labels(d / f"{name}_labels.csv", lm)
    (out / "sweep.csv").write_text(sweep_csv(results))
    return summarize(cfg, results)


def thread_count(cli_value: int | None) -> int:
    if cli_value is not None:
        return max(1, cli_value)
    env = os.environ.get("HSSEG_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError as exc:
        raise ConfigError(f"HSSEG_THREADS must be an integer, got {env!r}") from exc
