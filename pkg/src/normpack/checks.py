"""Numerical verifiers for the geometric facts the pipeline relies on.

Each checker samples a configurable number of trials and returns a
:class:`CheckReport` carrying (violations, trials, slack) plus the
headline value/bound pair; pass/fail thresholds live in the caller.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .bodies import (
    ConvexBody,
    closed_form_volume,
    helmert_basis,
    normalize_to_unit_volume,
    sample_uniform,
    simplex_difference,
)
from .volumetrics import (
    OverlapClassifier,
    analytic_polar_proj_volume,
    analytic_proj_support,
    exact_intersection_volume,
    has_exact_intersection,
    intersection_volume,
    mc_volume,
    polar_proj_ball_volume,
    polar_proj_volume_mc,
    proj_body_support,
)


@dataclass(frozen=True)
class CheckReport:
    """Structured verifier outcome; never a bare boolean."""

    check: str
    body: str
    d: int
    params: dict
    value: float
    std_error: float
    bound: float
    violations: int
    trials: int
    seed: int | None
    conclusive: bool = True
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "check": self.check,
            "body": self.body,
            "d": self.d,
            "params": self.params,
            "value": self.value,
            "std_error": self.std_error,
            "bound": self.bound,
            "violations": self.violations,
            "trials": self.trials,
            "seed": self.seed,
            "conclusive": self.conclusive,
        }
        rec.update(self.extra)
        return rec


def write_reports_jsonl(reports, path) -> None:
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.to_record(), sort_keys=True) + "\n")


def write_reports_csv(reports, path) -> None:
    fields = ["check", "body", "d", "value", "std_error", "bound", "violations", "trials", "seed", "conclusive", "params"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for rep in reports:
            row = rep.to_record()
            row["params"] = json.dumps(row["params"], sort_keys=True)
            w.writerow(row)


def _f_estimator(body, rng, mc_samples):
    """Return (f, sigma) callables; exact formulas when available."""
    if has_exact_intersection(body):
        return (lambda x: float(exact_intersection_volume(body, x))), (lambda x: 0.0)

    def f(x):
        return intersection_volume(body, x, mc_samples, rng).value

    def sig(x):
        return math.sqrt(0.25 / mc_samples)  # worst-case binomial

    return f, sig


def _h_proj(body, rng, support_samples):
    def h(x):
        n = np.linalg.norm(x)
        if n == 0:
            return 0.0
        a = analytic_proj_support(body, x / n)
        if a is not None:
            return a * n
        return proj_body_support(body, x / n, support_samples, rng).value * n

    return h


def check_schmuckenschlager(
    body: ConvexBody,
    delta: float,
    trials: int,
    rng: np.random.Generator,
    slack: float = 0.05,
    mc_samples: int = 20_000,
    seed: int | None = None,
) -> CheckReport:
    """Two-sided containment between {f > delta} and scaled Pi*K.

    Outer: f(x) > delta must imply h_{Pi K}(x) <= log(1/delta)(1+slack).
    Inner: h_{Pi K}(x) <= (1-delta)(1-slack) must imply f(x) > delta.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta in (0,1) required")
    f, _ = _f_estimator(body, rng, mc_samples)
    h = _h_proj(body, rng, mc_samples)
    xs = sample_uniform(body.scaled(2.0), rng, trials)
    log_bound = math.log(1.0 / delta)
    outer_viol = inner_viol = 0
    outer_checked = inner_checked = 0
    for x in xs:
        fx = f(x)
        hx = h(x)
        if fx > delta:
            outer_checked += 1
            if hx > log_bound * (1.0 + slack):
                outer_viol += 1
        if hx <= (1.0 - delta) * (1.0 - slack):
            inner_checked += 1
            if not fx > delta:
                inner_viol += 1
    return CheckReport(
        check="schmuckenschlager",
        body=body.describe(),
        d=body.d,
        params={"delta": delta, "slack": slack},
        value=float(outer_viol + inner_viol),
        std_error=0.0,
        bound=0.0,
        violations=outer_viol + inner_viol,
        trials=trials,
        seed=seed,
        extra={
            "outer_violations": outer_viol,
            "inner_violations": inner_viol,
            "outer_checked": outer_checked,
            "inner_checked": inner_checked,
        },
    )


def check_logconcavity(
    body: ConvexBody,
    rays: int,
    rng: np.random.Generator,
    mc_samples: int = 10_000,
    slope_directions: int = 0,
    slope_tol: float = 0.05,
    seed: int | None = None,
) -> CheckReport:
    """Log-concavity of f along random rays, plus the derivative identity.

    For each ray, picks 0 <= t1 < t2 inside the support and checks
    f(tm) >= f(t1)^lam f(t2)^(1-lam) up to 3-sigma Monte Carlo slack.
    With ``slope_directions`` > 0, additionally compares the one-sided
    finite-difference slope of log f at 0 against -h_{Pi K} (within
    ``slope_tol`` relative); the slope check uses exact f when available.
    """
    if rays < 1:
        raise ValueError("rays >= 1 required")
    exact = has_exact_intersection(body)
    viol = 0
    for _ in range(rays):
        y = rng.normal(size=body.d)
        y /= np.linalg.norm(y)
        t_sup = 2.0 / body.gauge(y)
        t1, t2 = np.sort(rng.uniform(0.0, 0.9 * t_sup, size=2))
        lam = rng.uniform(0.1, 0.9)
        tm = lam * t1 + (1.0 - lam) * t2
        if exact:
            f1 = float(exact_intersection_volume(body, t1 * y))
            f2 = float(exact_intersection_volume(body, t2 * y))
            fm = float(exact_intersection_volume(body, tm * y))
            sig = 1e-12
        else:
            e1 = intersection_volume(body, t1 * y, mc_samples, rng)
            e2 = intersection_volume(body, t2 * y, mc_samples, rng)
            em = intersection_volume(body, tm * y, mc_samples, rng)
            f1, f2, fm = e1.value, e2.value, em.value
            sig = em.std_error + abs(f2) * e1.std_error + abs(f1) * e2.std_error
        rhs = f1**lam * f2 ** (1.0 - lam)
        if fm < rhs - 3.0 * sig - 1e-12:
            viol += 1
    slope_fail = 0
    slope_errs = []
    if slope_directions > 0:
        h = _h_proj(body, rng, mc_samples)
        for _ in range(slope_directions):
            y = rng.normal(size=body.d)
            y /= np.linalg.norm(y)
            hy = h(y)
            eps = 0.05 / hy
            if exact:
                fe = float(exact_intersection_volume(body, eps * y))
            else:
                fe = intersection_volume(body, eps * y, max(mc_samples, 200_000), rng).value
            slope = math.log(fe) / eps  # f(0) = vol = 1 for normalized bodies
            rel = abs(slope + hy) / hy
            slope_errs.append(rel)
            if rel > slope_tol:
                slope_fail += 1
    return CheckReport(
        check="logconcavity",
        body=body.describe(),
        d=body.d,
        params={"mc_samples": mc_samples, "slope_tol": slope_tol},
        value=float(viol),
        std_error=0.0,
        bound=0.0,
        violations=viol + slope_fail,
        trials=rays + slope_directions,
        seed=seed,
        extra={
            "slope_failures": slope_fail,
            "max_slope_rel_err": max(slope_errs) if slope_errs else 0.0,
        },
    )


def check_petty(
    body: ConvexBody,
    rng: np.random.Generator,
    n_directions: int | None = None,
    support_samples: int = 20_000,
    slack: float = 0.0,
    seed: int | None = None,
) -> CheckReport:
    """vol(Pi* K) <= vol(Pi* B) for the unit-volume ball B of equal volume.

    Uses the closed form for balls and cubes, a direction-net Monte Carlo
    estimate otherwise.  Reports inconclusive (never pass) when the noise
    band straddles the bound.
    """
    bound = polar_proj_ball_volume(body.d).value
    analytic = analytic_polar_proj_volume(body)
    if analytic is not None:
        value, se = analytic, 0.0
    else:
        est = polar_proj_volume_mc(body, rng, n_directions, support_samples)
        value, se = est.value, est.std_error
    # equality (the ball itself) must pass despite float round-off
    ok = value <= bound * (1.0 + slack + 1e-12) + 3.0 * se
    conclusive = se == 0.0 or abs(value - bound) > 3.0 * se or value < bound
    return CheckReport(
        check="petty",
        body=body.describe(),
        d=body.d,
        params={"slack": slack},
        value=value,
        std_error=se,
        bound=bound,
        violations=0 if ok else 1,
        trials=1,
        seed=seed,
        conclusive=conclusive,
    )


def regular_simplex_volume(d: int) -> float:
    """d-volume of the simplex conv(e_1..e_{d+1}) in R^(d+1): sqrt(d+1)/d!."""
    return math.exp(0.5 * math.log(d + 1) - gammaln(d + 1.0))


def check_rogers_shephard(
    simplex_dim: int,
    samples: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> CheckReport:
    """vol(K - K)/vol(K) = binom(2d, d) for the regular simplex.

    The simplex ratio comes from an independent Monte Carlo volume of the
    difference body; the cube control 2^d < binom(2d, d) is exact.
    """
    d = simplex_dim
    diff = simplex_difference(d)
    est = mc_volume(diff, samples, rng)
    ratio = 2.0**d * est.value / regular_simplex_volume(d)
    ratio_se = 2.0**d * est.std_error / regular_simplex_volume(d)
    target = float(math.comb(2 * d, d))
    cube_ratio = 2.0**d  # (cube - cube) = 2 cube
    cube_ok = d < 2 or cube_ratio < target
    viol = 0 if abs(ratio - target) <= 3.0 * ratio_se + 0.05 * target and cube_ok else 1
    return CheckReport(
        check="rogers_shephard",
        body=f"simplex(d={d})",
        d=d,
        params={"samples": samples},
        value=ratio,
        std_error=ratio_se,
        bound=target,
        violations=viol,
        trials=1,
        seed=seed,
        extra={"cube_ratio": cube_ratio, "cube_strict": bool(cube_ok)},
    )


# -- Minkowski difference-body equivalence ----------------------------


def simplex_diff_membership_dual(d: int, z: np.ndarray) -> np.ndarray:
    """z in (S - S) for the regular simplex S, via the positive-part test.

    Lifting z to the zero-sum hyperplane, z = u - v with u, v in the
    simplex iff sum(max(w_i, 0)) <= 1.  Independent of the l_1 gauge route.
    """
    E = helmert_basis(d)
    w = np.atleast_2d(z) @ E.T
    return np.maximum(w, 0.0).sum(axis=-1) <= 1.0 + 1e-12


def check_minkowski_equivalence(
    d: int,
    n_sets: int,
    rng: np.random.Generator,
    set_size: int = 8,
    seed: int | None = None,
) -> CheckReport:
    """A center set packs the simplex iff it packs the difference body.

    Both predicates are evaluated per pair: translate disjointness for
    the simplex via the dual membership test (z outside the open
    difference body), and gauge >= 2 for the half-difference body.
    Counts predicate disagreements over random center sets scaled to
    straddle the critical packing distance.
    """
    body = simplex_difference(d)
    E = helmert_basis(d)
    disagreements = 0
    pack_true = pack_false = 0
    side = max(2, int(math.ceil(set_size ** (1.0 / d))))
    grid = np.stack(np.meshgrid(*([np.arange(side)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    for _ in range(n_sets):
        # jittered grid with spacing straddling the critical packing distance
        spacing = rng.uniform(1.0, 2.6)
        keep = rng.permutation(len(grid))[:set_size]
        pts = spacing * (grid[keep] + rng.uniform(-0.15, 0.15, size=(set_size, d)))
        ii, jj = np.triu_indices(set_size, 1)
        z = pts[ii] - pts[jj]
        # simplex route: translates x+S, y+S disjoint iff z not interior to S-S
        strict = np.maximum(np.atleast_2d(z) @ E.T, 0.0).sum(axis=-1) < 1.0 - 1e-12
        packs_simplex = not bool(strict.any())
        # difference-body route: gauge_{(S-S)/2}(z) >= 2
        packs_diff = bool(np.all(body.gauge(z) >= 2.0 - 1e-12))
        if packs_simplex != packs_diff:
            disagreements += 1
        if packs_simplex:
            pack_true += 1
        else:
            pack_false += 1
    return CheckReport(
        check="minkowski_equivalence",
        body=f"simplex(d={d})",
        d=d,
        params={"set_size": set_size},
        value=float(disagreements),
        std_error=0.0,
        bound=0.0,
        violations=disagreements,
        trials=n_sets,
        seed=seed,
        extra={"packing_true_sets": pack_true, "packing_false_sets": pack_false},
    )


def check_poisson_tail(
    lam: float,
    t: float,
    draws: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> CheckReport:
    """Empirical check of P[Z > (1+t) lam] <= exp(-lam t / 3) for Z ~ Pois(lam)."""
    if t < 1.0:
        raise ValueError("tail bound requires t >= 1")
    z = rng.poisson(lam, size=draws)
    p_hat = float(np.count_nonzero(z > (1.0 + t) * lam)) / draws
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / draws) / draws)
    bound = math.exp(-lam * t / 3.0)
    viol = 0 if p_hat <= bound + 3.0 * se else 1
    return CheckReport(
        check="poisson_tail",
        body="-",
        d=0,
        params={"lambda": lam, "t": t},
        value=p_hat,
        std_error=se,
        bound=bound,
        violations=viol,
        trials=draws,
        seed=seed,
    )
