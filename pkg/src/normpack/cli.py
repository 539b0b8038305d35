"""Command-line entry points.

Three commands are installed:

* ``pack run <config> [--seed S] [--out DIR]`` and
  ``pack sweep <config> --grid <spec>`` for pipeline runs,
* ``vol body-info <body>`` and ``vol intersection <body> --x <vec>``
  for one-off volumetrics,
* ``verify all|schmuck|logconc|petty|rs|minkowski|poisson [--level]``
  for the verification suite.

Grid specs look like ``Delta=20,30,40`` or ``d=2:4``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .bodies import VolumeUnavailableError, body_from_spec, closed_form_volume, normalize_to_unit_volume
from .harness import (
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    run_pipeline,
    sweep,
    verify_suite,
    write_sweep_csv,
)
from .checks import write_reports_jsonl
from .volumetrics import intersection_volume, mc_volume


def _load_config(path: str, seed: int | None, out: str | None) -> ExperimentConfig:
    with open(path) as fh:
        cfg = ExperimentConfig.from_json(fh.read())
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out is not None:
        cfg = replace(cfg, out_dir=out)
    return cfg


def _parse_grid(spec: str):
    name, _, values = spec.partition("=")
    name = name.strip()
    if name not in ("Delta", "d"):
        raise SystemExit(f"grid axis must be Delta or d, got {name!r}")
    if ":" in values:
        lo, hi = values.split(":")
        grid = list(range(int(lo), int(hi) + 1))
    else:
        grid = [float(v) for v in values.split(",") if v.strip()]
    if not grid:
        raise SystemExit("empty grid")
    return name, grid


def pack_main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pack", description="packing pipeline runs")
    sub = ap.add_subparsers(dest="cmd", required=True)
    run_p = sub.add_parser("run", help="run the pipeline once")
    run_p.add_argument("config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_DIR_ENV})")
    sweep_p = sub.add_parser("sweep", help="run a parameter sweep")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--grid", required=True, help="e.g. Delta=20,30,40 or d=2:4")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    cfg = _load_config(args.config, args.seed, args.out)
    if args.cmd == "run":
        rec = run_pipeline(cfg)
        print(rec.to_json())
        return 0
    axis, grid = _parse_grid(args.grid)
    rows = sweep(
        cfg,
        deltas=grid if axis == "Delta" else None,
        ds=grid if axis == "d" else None,
        workers=args.workers,
    )
    out_dir = cfg.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sweep.csv")
    write_sweep_csv(rows, path)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    print(f"wrote {path}", file=sys.stderr)
    return 0


def vol_main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="vol", description="convex-body volumetrics")
    sub = ap.add_subparsers(dest="cmd", required=True)
    info_p = sub.add_parser("body-info", help="volume, circumradius, unit-volume scale")
    info_p.add_argument("body", help="body specification JSON file")
    info_p.add_argument("--samples", type=int, default=1_000_000)
    info_p.add_argument("--seed", type=int, default=1)
    int_p = sub.add_parser("intersection", help="vol(K cap (K + x))")
    int_p.add_argument("body")
    int_p.add_argument("--x", required=True, help="comma-separated translation vector")
    int_p.add_argument("--samples", type=int, default=200_000)
    int_p.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    with open(args.body) as fh:
        body = body_from_spec(json.load(fh))
    rng = np.random.default_rng(args.seed)
    if args.cmd == "body-info":
        try:
            vol = closed_form_volume(body)
            vol_se = 0.0
        except VolumeUnavailableError:
            est = mc_volume(body, args.samples, rng)
            vol, vol_se = est.value, est.std_error
        unit = normalize_to_unit_volume(body, vol)
        print(
            json.dumps(
                {
                    "body": body.describe(),
                    "d": body.d,
                    "volume": vol,
                    "volume_std_error": vol_se,
                    "circumradius": body.circumradius(),
                    "unit_volume_scale": unit.scale,
                },
                sort_keys=True,
            )
        )
        return 0
    x = np.asarray([float(v) for v in args.x.split(",")])
    try:
        vol = closed_form_volume(body)
    except VolumeUnavailableError:
        vol = mc_volume(body, args.samples, rng).value
    est = intersection_volume(body, x, args.samples, rng, volume=vol)
    print(json.dumps({"x": list(map(float, x)), "value": est.value, "std_error": est.std_error}, sort_keys=True))
    return 0


def verify_main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="verify", description="numerical verification suite")
    ap.add_argument(
        "which",
        choices=["all", "schmuck", "logconc", "petty", "rs", "minkowski", "poisson"],
    )
    ap.add_argument("--level", choices=["fast", "full"], default="fast")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default=None, help="write reports as JSON lines")
    args = ap.parse_args(argv)
    reports = verify_suite(args.level, args.seed, args.which)
    bad = 0
    for rep in reports:
        status = "ok" if rep.violations == 0 and rep.conclusive else (
            "inconclusive" if not rep.conclusive else "VIOLATION"
        )
        bad += rep.violations
        print(f"{rep.check:24s} {rep.body:32s} d={rep.d} violations={rep.violations} [{status}]")
    if args.out:
        write_reports_jsonl(reports, args.out)
    print(f"total violations: {bad}")
    return 0 if bad == 0 else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(pack_main())
