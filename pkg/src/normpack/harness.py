"""Experiment orchestration: configs, the full pipeline, sweeps, suites.

Every stochastic stage draws from a child generator derived by hashing
the stage label into the master seed, so results are independent of
worker count and bitwise reproducible for a given config.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import checks as checks_mod
from .bodies import ConvexBody, body_from_spec, body_to_spec, closed_form_volume, cube, lp_ball, normalize_to_unit_volume
from .checks import CheckReport
from .indset import greedy_independent_set, local_search_improve, verify_packing
from .packing import (
    PruneReport,
    TorusDomain,
    build_graph,
    degree_codegree_stats,
    prune,
    sample_poisson,
)
from .bodies import VolumeUnavailableError
from .volumetrics import estimate_ik, mc_volume

OUTPUT_DIR_ENV = "PACK_OUTPUT_DIR"


def child_seed(master: int, label: str) -> int:
    """Stable per-stage seed: sha256 of "<master>:<label>", first 8 bytes."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def child_rng(master: int, label: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, label))


@dataclass(frozen=True)
class ExperimentConfig:
    """One pipeline run.  ``workers`` and ``out_dir`` are execution
    details excluded from the config hash and the persisted record."""

    body: dict
    d: int
    L: float
    Delta: float
    ik_delta: float
    codegree_coeff: float
    mc_samples: int
    seed: int
    ik_outer_samples: int = 20_000
    local_search_budget: int = 100
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        for name in ("L", "Delta", "ik_delta", "codegree_coeff", "mc_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an integer (wall-clock seeding is not allowed)")

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        d.pop("out_dir")
        return d

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        return ExperimentConfig(**data)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(text))


def default_config(d: int, seed: int = 1) -> ExperimentConfig:
    """Desk-scale defaults: unit-volume l2 ball, thresholds overridden
    from their asymptotic values so every pruning rule stays active
    without gutting the sample (the literal constants are meaningless
    at small d)."""
    delta_by_d = {2: 30.0, 3: 30.0, 4: 32.0}
    L_by_d = {2: 20.0, 3: 10.0, 4: 7.0}
    if d not in delta_by_d:
        raise ValueError(f"no default config for d={d} (supported: 2, 3, 4)")
    return ExperimentConfig(
        body={"kind": "lp", "d": d, "p": 2, "scale": 1.0},
        d=d,
        L=L_by_d[d],
        Delta=delta_by_d[d],
        ik_delta=0.95,
        codegree_coeff=1.2,
        mc_samples=20_000,
        seed=seed,
    )


def asymptotic_ik_delta(d: int) -> float:
    """The literal threshold d^-10, floored at 1e-6."""
    return max(d**-10.0, 1e-6)


def asymptotic_codegree_coeff(d: int) -> float:
    """The literal coefficient d^-9, floored at 1e-3."""
    return max(d**-9.0, 1e-3)


@dataclass
class RunRecord:
    """Result of one pipeline run.

    ``timing`` is informational only and excluded from the canonical
    serialization so identical configs give byte-identical records.
    """

    config: dict
    config_hash: str
    n_points: int
    ik: dict
    prune_report: dict
    stats_pre: dict
    stats_post: dict
    packing: dict
    preconditions: dict
    timing: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {k: v for k, v in self.__dict__.items() if k != "timing"}
        return json.dumps(payload, sort_keys=True)


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")


def _stage(name, timings, fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:  # annotate with the stage name
        raise PipelineStageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    return out


def run_pipeline(config: ExperimentConfig) -> RunRecord:
    """normalize -> estimate_ik -> sample -> graph -> prune -> independent
    set -> verify; deterministic given the config."""
    timings: dict[str, float] = {}
    seed = config.seed

    def normalize():
        body = body_from_spec(config.body)
        if body.d != config.d:
            raise ValueError("config d does not match body dimension")
        try:
            return normalize_to_unit_volume(body)
        except VolumeUnavailableError:
            est = mc_volume(body, max(config.mc_samples, 100_000), child_rng(seed, "normalize"))
            return normalize_to_unit_volume(body, est.value)

    body = _stage("normalize", timings, normalize)
    domain = TorusDomain(config.d, config.L)
    _stage("validate", timings, lambda: domain.validate_for_body(body))
    ik = _stage(
        "estimate_ik",
        timings,
        lambda: estimate_ik(
            body, config.ik_delta, config.ik_outer_samples, config.mc_samples, child_rng(seed, "ik")
        ),
    )
    points = _stage(
        "sample_poisson",
        timings,
        lambda: sample_poisson(domain, config.Delta, child_rng(seed, "poisson"), seed=seed),
    )
    graph = _stage("build_graph", timings, lambda: build_graph(points, body, domain))
    stats_pre = degree_codegree_stats(graph)
    pruned, report = _stage(
        "prune",
        timings,
        lambda: prune(graph, body, ik, config.Delta, config.codegree_coeff, domain, child_rng(seed, "prune")),
    )
    stats_post = degree_codegree_stats(pruned)
    indep = _stage(
        "greedy",
        timings,
        lambda: greedy_independent_set(pruned, "random", child_rng(seed, "greedy")),
    )
    indep = _stage(
        "local_search",
        timings,
        lambda: local_search_improve(pruned, indep, config.local_search_budget),
    )
    result = _stage(
        "verify_packing",
        timings,
        lambda: verify_packing(
            pruned.points[indep], body, domain, 1.0, n_candidates=pruned.n, Delta=config.Delta
        ),
    )
    preconditions = {
        "d_gt_10": config.d > 10,
        "Delta_gt_d12": config.Delta > config.d**12,
        "Delta_le_Delta_K": config.Delta <= ik.delta_k,
    }
    record = RunRecord(
        config=config.canonical(),
        config_hash=config.hash(),
        n_points=len(points),
        ik={
            "delta": ik.delta,
            "vol_ik": ik.vol_ik,
            "vol_ik_std_error": ik.volume_estimate.std_error,
            "delta_k": ik.delta_k if math.isfinite(ik.delta_k) else None,
            "degenerate": ik.degenerate,
        },
        prune_report={
            "n_initial": report.n_initial,
            "removed_x1": report.removed_x1,
            "removed_x2": report.removed_x2,
            "removed_x3": report.removed_x3,
            "removed_union": report.removed_union,
            "retained": report.retained,
            "boundary_pairs": report.boundary_pairs,
            "expected_sizes": report.expected_sizes,
        },
        stats_pre=stats_pre,
        stats_post=stats_post,
        packing=result.summary(),
        preconditions=preconditions,
        timing=timings,
    )
    out_dir = config.out_dir or os.environ.get(OUTPUT_DIR_ENV)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"run_{config.hash()[:12]}.jsonl")
        with open(path, "w") as fh:
            fh.write(record.to_json() + "\n")
    return record


SWEEP_COLUMNS = [
    "d",
    "Delta",
    "n_pre",
    "n_post",
    "independent_set",
    "density",
    "trivial_bound",
    "log_delta_over_delta",
    "status",
]


def sweep(
    template: ExperimentConfig,
    deltas=None,
    ds=None,
    workers: int | None = None,
) -> list[dict]:
    """One pipeline run per grid point; failures become flagged rows.

    Exactly one of ``deltas`` / ``ds`` selects the grid axis.  Each grid
    point gets its own child seed, so results do not depend on worker
    count or completion order.
    """
    if (deltas is None) == (ds is None):
        raise ValueError("specify exactly one of deltas / ds")
    points = []
    if deltas is not None:
        for i, D in enumerate(deltas):
            points.append(replace(template, Delta=float(D), seed=child_seed(template.seed, f"sweep:{i}") % 2**31))
    else:
        for i, d in enumerate(ds):
            base = default_config(int(d), seed=child_seed(template.seed, f"sweep:{i}") % 2**31)
            points.append(replace(base, ik_delta=template.ik_delta, codegree_coeff=template.codegree_coeff))
    workers = workers or template.workers

    def run_one(cfg):
        try:
            rec = run_pipeline(cfg)
            return {
                "d": cfg.d,
                "Delta": cfg.Delta,
                "n_pre": rec.prune_report["n_initial"],
                "n_post": rec.prune_report["retained"],
                "independent_set": rec.packing["count"],
                "density": rec.packing["density"],
                "trivial_bound": rec.packing["trivial_bound"],
                "log_delta_over_delta": math.log(cfg.Delta) / cfg.Delta if cfg.Delta > 1 else None,
                "status": "ok",
            }
        except Exception as exc:
            return {
                "d": cfg.d,
                "Delta": cfg.Delta,
                "n_pre": None,
                "n_post": None,
                "independent_set": None,
                "density": None,
                "trivial_bound": 2.0**-cfg.d,
                "log_delta_over_delta": None,
                "status": f"error: {exc}",
            }

    if workers and workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, points))
    else:
        rows = [run_one(cfg) for cfg in points]
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


# -- verification suite -----------------------------------------------

FAST = "fast"
FULL = "full"


def verify_suite(level: str = FAST, seed: int = 1, which: str = "all") -> list[CheckReport]:
    """Run the volumetric verifiers plus the Minkowski equivalence and
    Poisson tail checks; verdicts live in the reports, never exceptions."""
    if level not in (FAST, FULL):
        raise ValueError("level must be 'fast' or 'full'")
    big = level == FULL
    trials = 1000 if big else 200
    rays = 200 if big else 50
    samples = 1_000_000 if big else 100_000
    reports: list[CheckReport] = []

    def want(name):
        return which in ("all", name)

    if want("schmuck"):
        for d in (2, 3):
            for body in (normalize_to_unit_volume(lp_ball(d, 2)), cube(d)):
                for delta in (0.05, 0.5):
                    rng = child_rng(seed, f"schmuck:{d}:{body.kind}:{delta}")
                    reports.append(
                        checks_mod.check_schmuckenschlager(body, delta, trials, rng, seed=seed)
                    )
    if want("logconc"):
        for d in (2, 3):
            body = normalize_to_unit_volume(lp_ball(d, 2))
            rng = child_rng(seed, f"logconc:{d}")
            reports.append(
                checks_mod.check_logconcavity(body, rays, rng, slope_directions=5, seed=seed)
            )
    if want("petty"):
        for d in (2, 3, 4):
            rng = child_rng(seed, f"petty:{d}")
            reports.append(checks_mod.check_petty(cube(d), rng, seed=seed))
    if want("rs"):
        for d in (1, 2, 3):
            rng = child_rng(seed, f"rs:{d}")
            reports.append(checks_mod.check_rogers_shephard(d, samples, rng, seed=seed))
    if want("minkowski"):
        for d in (2, 3):
            rng = child_rng(seed, f"minkowski:{d}")
            reports.append(
                checks_mod.check_minkowski_equivalence(d, 100 if big else 30, rng, seed=seed)
            )
    if want("poisson"):
        rng = child_rng(seed, "poisson_tail")
        reports.append(
            checks_mod.check_poisson_tail(20.0, 1.0, 100_000 if big else 20_000, rng, seed=seed)
        )
    return reports
