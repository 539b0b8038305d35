"""Monte Carlo volume machinery and projection-body computations.

Covers plain rejection volume estimates, translate-intersection volumes
f(x) = vol(K cap (K + x)) with exact formulas for Euclidean balls and
cubes, the overlap region I_K = {x : f(x) > delta} with its intensity
bound Delta_K = 1/(d vol I_K), and support/volume computations for the
projection body and its polar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .bodies import (
    ConvexBody,
    ball_volume,
    closed_form_volume,
    sample_uniform,
    unit_volume_ball_radius,
)

MC_MIN_SAMPLES = 1_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo estimate with its binomial standard error."""

    value: float
    std_error: float
    samples: int
    seed: int | None = None

    def brackets(self, truth: float, sigmas: float = 3.0) -> bool:
        return abs(self.value - truth) <= sigmas * self.std_error + 1e-15


def mc_volume(body: ConvexBody, samples: int, rng: np.random.Generator, seed: int | None = None) -> McEstimate:
    """Volume by rejection from the support bounding box."""
    if samples < MC_MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MC_MIN_SAMPLES}")
    half = body.bounding_halfwidths()
    box_vol = float(np.prod(2.0 * half))
    hits = 0
    left = samples
    while left > 0:
        m = min(left, _CHUNK)
        pts = rng.uniform(-half, half, size=(m, body.d))
        hits += int(np.count_nonzero(body.gauge(pts) <= 1.0))
        left -= m
    p = hits / samples
    return McEstimate(
        value=box_vol * p,
        std_error=box_vol * math.sqrt(p * (1.0 - p) / samples),
        samples=samples,
        seed=seed,
    )


# -- intersection volumes ---------------------------------------------


def ball_cap_volume(d: int, r: float, a: float) -> float:
    """Volume of the cap {x in B(0,r) : x_1 >= a} for 0 <= a <= r."""
    if a >= r:
        return 0.0
    if a <= -r:
        return ball_volume(d) * r**d
    x = 1.0 - (a / r) ** 2
    half = 0.5 * ball_volume(d) * r**d
    cap = half * betainc(0.5 * (d + 1), 0.5, x)
    return cap if a >= 0 else 2.0 * half - cap


def ball_lens_volume(d: int, r: float, s: float) -> float:
    """vol of the intersection of two radius-r balls with centers s apart."""
    return 2.0 * ball_cap_volume(d, r, 0.5 * s)


def exact_intersection_volume(body: ConvexBody, x: np.ndarray) -> np.ndarray | float | None:
    """Closed-form f(x) = vol(body cap (body + x)) where known.

    Euclidean balls use the lens formula; cubes the separable product
    prod(side - |x_i|)_+.  Returns None for other bodies.
    """
    if body.kind != "lp" or (body.p != 2.0 and not math.isinf(body.p)):
        return None
    x = np.asarray(x, dtype=float)
    if body.p == 2.0:
        r = body.scale
        s = np.sqrt((x * x).sum(axis=-1))
        if s.ndim == 0:
            return ball_lens_volume(body.d, r, float(s))
        return np.asarray([ball_lens_volume(body.d, r, si) for si in s])
    side = 2.0 * body.scale
    out = np.prod(np.maximum(side - np.abs(x), 0.0), axis=-1)
    return float(out) if out.ndim == 0 else out


def has_exact_intersection(body: ConvexBody) -> bool:
    return body.kind == "lp" and (body.p == 2.0 or math.isinf(body.p))


def intersection_volume(
    body: ConvexBody,
    x: np.ndarray,
    samples: int,
    rng: np.random.Generator,
    volume: float | None = None,
) -> McEstimate:
    """Estimate f(x) = vol(body cap (body + x)).

    Samples y uniform in the body and tests gauge(y - x) <= 1; the hit
    fraction times vol(body) is an unbiased estimate.  ``volume``
    defaults to the closed form (1 for a normalized body).
    """
    x = np.asarray(x, dtype=float)
    if volume is None:
        volume = closed_form_volume(body)
    y = sample_uniform(body, rng, samples)
    p = float(np.count_nonzero(body.gauge(y - x) <= 1.0)) / samples
    return McEstimate(
        value=volume * p,
        std_error=volume * math.sqrt(p * (1.0 - p) / samples),
        samples=samples,
    )


class OverlapClassifier:
    """Decides whether f(x) > delta, exactly or by escalating Monte Carlo.

    The MC route starts at ``base_samples`` and multiplies by 4 until the
    3-sigma band excludes delta or the cap is reached; still-ambiguous
    points are labeled boundary and, per the conservative convention,
    treated as inside I_K.
    """

    def __init__(
        self,
        body: ConvexBody,
        delta: float,
        rng: np.random.Generator | None = None,
        base_samples: int = 2_000,
        max_escalations: int = 4,
        force_mc: bool = False,
    ):
        self.body = body
        self.delta = float(delta)
        self.rng = rng
        self.base_samples = base_samples
        self.max_escalations = max_escalations
        self.exact = has_exact_intersection(body) and not force_mc
        self.boundary_count = 0
        if not self.exact and rng is None:
            raise ValueError("MC classification needs an rng")

    def f_exact(self, x: np.ndarray):
        return exact_intersection_volume(self.body, x)

    def inside(self, x: np.ndarray) -> np.ndarray:
        """Vectorized membership x in I_K (boundary counts as inside)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.exact:
            return np.asarray(self.f_exact(x)) > self.delta
        return np.asarray([self._classify_one(xi) for xi in x])

    def _classify_one(self, x: np.ndarray) -> bool:
        n = self.base_samples
        for _ in range(self.max_escalations + 1):
            est = intersection_volume(self.body, x, n, self.rng)
            if abs(est.value - self.delta) > 3.0 * est.std_error:
                return est.value > self.delta
            n *= 4
        self.boundary_count += 1
        return True  # conservative: ambiguous points count as inside I_K


@dataclass(frozen=True)
class IkProfile:
    """Estimated overlap region I_K and the derived intensity cap Delta_K."""

    body: ConvexBody
    delta: float
    volume_estimate: McEstimate
    delta_k: float
    degenerate: bool = False
    boundary_points: int = 0

    @property
    def vol_ik(self) -> float:
        return self.volume_estimate.value


def estimate_ik(
    body: ConvexBody,
    delta: float,
    outer_samples: int,
    inner_samples: int,
    rng: np.random.Generator,
    force_mc: bool = False,
) -> IkProfile:
    """Estimate vol(I_K) by sampling translations uniformly in 2K.

    ``inner_samples`` seeds the escalating MC classifier (ignored for
    bodies with exact intersection formulas unless ``force_mc``).
    Degenerate all-hit / no-hit outcomes are flagged rather than raised.
    """
    if not (0.0 < delta < 1.0):
        if delta >= 1.0:
            est = McEstimate(0.0, 0.0, 0, None)
            return IkProfile(body, delta, est, math.inf, degenerate=True)
        raise ValueError("delta must be positive")
    vol2k = closed_form_volume(body.scaled(2.0)) if _volume_known(body) else 2.0**body.d
    xs = sample_uniform(body.scaled(2.0), rng, outer_samples)
    clf = OverlapClassifier(body, delta, rng, base_samples=inner_samples, force_mc=force_mc)
    hits = int(np.count_nonzero(clf.inside(xs)))
    p = hits / outer_samples
    est = McEstimate(
        value=vol2k * p,
        std_error=vol2k * math.sqrt(p * (1.0 - p) / outer_samples),
        samples=outer_samples,
    )
    degenerate = hits == 0 or hits == outer_samples
    delta_k = math.inf if est.value == 0.0 else 1.0 / (body.d * est.value)
    return IkProfile(body, delta, est, delta_k, degenerate, clf.boundary_count)


def ik_gauge_radius(body: ConvexBody, delta: float, tol: float = 1e-9) -> float:
    """Smallest g with I_K contained in {gauge <= g}; 2.0 if unknown.

    Used to shrink the candidate-pair search radius during pruning.
    """
    f = exact_intersection_volume
    if body.kind == "lp" and math.isinf(body.p):
        # f > delta forces (side - |x_i|) * side^(d-1) > delta on each axis
        side = 2.0 * body.scale
        vol = side**body.d
        if delta >= vol:
            return 0.0
        return 2.0 * (1.0 - delta / vol)
    if body.kind == "lp" and body.p == 2.0:
        lo, hi = 0.0, 2.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if f(body, np.array([mid * body.scale] + [0.0] * (body.d - 1))) > delta:
                lo = mid
            else:
                hi = mid
        return hi
    return 2.0


def _volume_known(body: ConvexBody) -> bool:
    return body.kind != "hpoly"


# -- projection bodies ------------------------------------------------


def analytic_proj_support(body: ConvexBody, u: np.ndarray) -> float | None:
    """h_{Pi K}(u) in closed form for balls and cubes, else None.

    1-homogeneous in u.
    """
    if body.kind != "lp":
        return None
    u = np.asarray(u, dtype=float)
    if body.p == 2.0:
        r = body.scale
        return ball_volume(body.d - 1) * r ** (body.d - 1) * float(np.linalg.norm(u))
    if math.isinf(body.p):
        side = 2.0 * body.scale
        return side ** (body.d - 1) * float(np.abs(u).sum())
    return None


def _orthonormal_complement(u: np.ndarray) -> np.ndarray:
    """(d, d-1) matrix whose columns complete u to an orthonormal basis."""
    d = len(u)
    M = np.eye(d) - np.outer(u, u)
    q, r = np.linalg.qr(M)
    cols = np.argsort(-np.abs(np.diag(r)))[: d - 1]
    return q[:, sorted(cols)]


def _line_hits_body(body: ConvexBody, base: np.ndarray, u: np.ndarray, t_max: float) -> np.ndarray:
    """For each base point z, does the line z + t*u meet the body?

    Closed-form interval tests for balls, boxes and H-polytopes;
    vectorized golden-section minimization of gauge(z + t*u) otherwise.
    """
    if body.kind == "lp" and body.p == 2.0:
        # |z|^2 + 2t z.u + t^2 <= r^2 with z orthogonal-ish to u handled generally
        b = base @ u
        c = (base * base).sum(axis=1) - body.scale**2
        disc = b * b - c
        return disc >= 0.0
    if body.kind == "lp" and math.isinf(body.p):
        s = body.scale
        lo = np.full(len(base), -np.inf)
        hi = np.full(len(base), np.inf)
        for i in range(body.d):
            ui = u[i]
            if abs(ui) < 1e-15:
                ok = np.abs(base[:, i]) <= s
                lo = np.where(ok, lo, np.inf)
                continue
            t1 = (-s - base[:, i]) / ui
            t2 = (s - base[:, i]) / ui
            lo = np.maximum(lo, np.minimum(t1, t2))
            hi = np.minimum(hi, np.maximum(t1, t2))
        return lo <= hi
    if body.kind == "hpoly":
        A = body.normals
        b = body.offsets * body.scale
        num = b[None, :] - base @ A.T
        den = A @ u
        lo = np.full(len(base), -np.inf)
        hi = np.full(len(base), np.inf)
        for j in range(len(b)):
            dj = den[j]
            if abs(dj) < 1e-15:
                ok = num[:, j] >= 0.0
                lo = np.where(ok, lo, np.inf)
                continue
            t = num[:, j] / dj
            if dj > 0:
                hi = np.minimum(hi, t)
            else:
                lo = np.maximum(lo, t)
        return lo <= hi
    # generic convex 1-D search (gauge along a line is convex)
    a = np.full(len(base), -t_max)
    b = np.full(len(base), t_max)
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1 = body.gauge(base + x1[:, None] * u)
    f2 = body.gauge(base + x2[:, None] * u)
    for _ in range(80):
        left = f1 <= f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x1 = b - phi * (b - a)
        x2 = a + phi * (b - a)
        f1 = body.gauge(base + x1[:, None] * u)
        f2 = body.gauge(base + x2[:, None] * u)
    return np.minimum(f1, f2) <= 1.0 + 1e-10


def proj_body_support(
    body: ConvexBody,
    u: np.ndarray,
    samples: int,
    rng: np.random.Generator,
    force_mc: bool = False,
) -> McEstimate:
    """Shadow volume vol_{d-1} of the projection of the body onto u-perp.

    Analytic for balls and cubes; otherwise Monte Carlo over a bounding
    box of the shadow, testing whether the line through each candidate
    point in direction u meets the body.
    """
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("u must be a Euclidean unit vector")
    if not force_mc:
        h = analytic_proj_support(body, u)
        if h is not None:
            return McEstimate(value=h, std_error=0.0, samples=0)
    V = _orthonormal_complement(u)
    # shadow of the body is contained in the projected bounding box
    half = np.asarray([body.support(V[:, j]) for j in range(body.d - 1)])
    area = float(np.prod(2.0 * half))
    t_max = float(body.support(u)) + 1e-9
    z = rng.uniform(-half, half, size=(samples, body.d - 1))
    base = z @ V.T
    hits = int(np.count_nonzero(_line_hits_body(body, base, u, t_max)))
    p = hits / samples
    if p == 0:
        raise RuntimeError("shadow bounding box produced no hits; bracketing bug")
    return McEstimate(
        value=area * p,
        std_error=area * math.sqrt(p * (1.0 - p) / samples),
        samples=samples,
    )


@dataclass(frozen=True)
class PolarProjBall:
    """Exact volume of the polar projection body of the unit-volume ball."""

    d: int
    value: float
    bound: float  # (2 pi / d)^(d/2)


def polar_proj_ball_volume(d: int) -> PolarProjBall:
    """(gamma_d / gamma_{d-1})^d via log-gamma, with its upper bound.

    gamma_0 = 1 by convention, so d = 1 gives 2.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    log_ratio = (
        0.5 * math.log(math.pi) + gammaln(0.5 * (d - 1) + 1.0) - gammaln(0.5 * d + 1.0)
    )
    value = math.exp(d * log_ratio)
    bound = (2.0 * math.pi / d) ** (0.5 * d)
    assert value <= bound * (1.0 + 1e-12)
    return PolarProjBall(d=d, value=value, bound=bound)


def analytic_polar_proj_volume(body: ConvexBody) -> float | None:
    """vol(Pi* body) in closed form for balls and cubes."""
    if body.kind != "lp":
        return None
    d = body.d
    if body.p == 2.0:
        radius = 1.0 / (ball_volume(d - 1) * body.scale ** (d - 1))
        return ball_volume(d) * radius**d
    if math.isinf(body.p):
        # Pi(cube of side a) = a^(d-1) [-1,1]^d, polar = scaled l1 ball
        side = 2.0 * body.scale
        return math.exp(d * math.log(2.0) - gammaln(d + 1.0)) / side ** (d * (d - 1))
    return None


def polar_proj_volume_mc(
    body: ConvexBody,
    rng: np.random.Generator,
    n_directions: int | None = None,
    support_samples: int = 20_000,
) -> McEstimate:
    """vol(Pi* K) from a direction net, via the radial formula.

    Since gauge_{Pi* K}(x) = h_{Pi K}(x), the volume equals
    gamma_d * E_theta[h_{Pi K}(theta)^(-d)] over uniform unit theta.
    Net resolution (not just sampling noise) limits accuracy; the
    standard error reported covers the directional average only.
    """
    d = body.d
    if n_directions is None:
        n_directions = max(2 * d * d, 32)
    thetas = rng.normal(size=(n_directions, d))
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    vals = np.empty(n_directions)
    for i, th in enumerate(thetas):
        vals[i] = proj_body_support(body, th, support_samples, rng).value
    r_d = vals**(-float(d))
    gd = ball_volume(d)
    return McEstimate(
        value=gd * float(r_d.mean()),
        std_error=gd * float(r_d.std(ddof=1)) / math.sqrt(n_directions),
        samples=n_directions,
    )


def gamma_ratio(x: float) -> float:
    """x! / (x - 1/2)! for real x >= 1/2 (log-gamma evaluation)."""
    return math.exp(gammaln(x + 1.0) - gammaln(x + 0.5))
