"""Poisson sampling on a flat torus, intersection graphs, and pruning.

The pipeline here mirrors the probabilistic construction: sample a
Poisson point set, connect points whose body translates intersect
(gauge of the minimal-image difference at most 2), then remove

* X1: points whose degree exceeds Delta + Delta^(2/3),
* X2: endpoints of pairs whose difference lies in 2 I_K (deep overlap),
* X3: endpoints of pairs outside 2 I_K whose codegree reaches
  codegree_coeff * Delta.

By construction the surviving graph satisfies both the degree and the
codegree bound; tests re-verify this by brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bodies import ConvexBody
from .volumetrics import IkProfile, OverlapClassifier, ik_gauge_radius

DEFAULT_POINT_CAP = 2_000_000


@dataclass(frozen=True)
class TorusDomain:
    """Periodic box [0, L)^d; displacements use the minimal image."""

    d: int
    L: float

    def __post_init__(self):
        if self.d < 1 or self.L <= 0:
            raise ValueError("need d >= 1 and L > 0")

    @property
    def volume(self) -> float:
        return self.L**self.d

    def min_image(self, v: np.ndarray) -> np.ndarray:
        """Coordinate-wise representative of v in (-L/2, L/2]^d."""
        w = v - self.L * np.round(np.asarray(v, dtype=float) / self.L)
        return np.where(w <= -0.5 * self.L, w + self.L, w)

    def validate_for_body(self, body: ConvexBody) -> None:
        """No self-wrap: a 2K translate must not meet itself around the torus."""
        need = 4.0 * body.scaled(2.0).circumradius()
        if self.L <= need:
            raise ValueError(
                f"L={self.L} too small for {body.describe()}: need L > {need:.4g}"
            )


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray  # (n, d) in [0, L)^d
    seed: int | None
    intensity: float

    def __len__(self) -> int:
        return len(self.points)


def sample_poisson(
    domain: TorusDomain,
    Delta: float,
    rng: np.random.Generator,
    seed: int | None = None,
    point_cap: int = DEFAULT_POINT_CAP,
) -> PointSet:
    """Poisson point process with intensity 2^-d Delta on the domain."""
    if Delta < 0:
        raise ValueError("Delta must be nonnegative")
    lam = Delta / 2.0**domain.d
    mean = lam * domain.volume
    if mean > point_cap:
        raise ValueError(f"expected count {mean:.3g} exceeds cap {point_cap}")
    n = int(rng.poisson(mean))
    pts = rng.uniform(0.0, domain.L, size=(n, domain.d))
    return PointSet(points=pts, seed=seed, intensity=lam)


@dataclass
class PackingGraph:
    """Intersection graph over a point set, with its spatial hash."""

    points: np.ndarray
    neighbors: list  # list of sorted int arrays
    domain: TorusDomain
    cell_side: float
    original_indices: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.points)

    def degree(self) -> np.ndarray:
        return np.asarray([len(a) for a in self.neighbors], dtype=int)

    def edge_count(self) -> int:
        return int(self.degree().sum()) // 2

    def adjacency_csr(self) -> sp.csr_matrix:
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in self.neighbors])
        indices = (
            np.concatenate(self.neighbors)
            if self.n and indptr[-1]
            else np.empty(0, dtype=np.int64)
        )
        data = np.ones(len(indices), dtype=np.float32)
        return sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def subgraph(self, keep_mask: np.ndarray) -> "PackingGraph":
        keep = np.flatnonzero(keep_mask)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        nbrs = []
        for i in keep:
            m = remap[self.neighbors[i]]
            nbrs.append(np.sort(m[m >= 0]))
        orig = keep if self.original_indices is None else self.original_indices[keep]
        return PackingGraph(
            points=self.points[keep],
            neighbors=nbrs,
            domain=self.domain,
            cell_side=self.cell_side,
            original_indices=orig,
        )


class _CellIndex:
    """Spatial hash on the torus with an integer number of cells per axis."""

    def __init__(self, points: np.ndarray, domain: TorusDomain, min_side: float):
        self.domain = domain
        self.ncells = max(1, int(math.floor(domain.L / min_side)))
        self.side = domain.L / self.ncells
        self.d = domain.d
        codes = np.floor(points / self.side).astype(np.int64) % self.ncells
        self.flat = self._flatten(codes)
        order = np.argsort(self.flat, kind="stable")
        self.order = order
        self.sorted_flat = self.flat[order]
        self.uniq, self.starts = np.unique(self.sorted_flat, return_index=True)
        self.ends = np.append(self.starts[1:], len(points))
        self.lookup = dict(zip(self.uniq.tolist(), range(len(self.uniq))))

    def _flatten(self, codes: np.ndarray) -> np.ndarray:
        flat = np.zeros(len(codes), dtype=np.int64)
        for j in range(self.d):
            flat = flat * self.ncells + codes[:, j]
        return flat

    def cell_members(self, flat_code: int) -> np.ndarray:
        k = self.lookup.get(flat_code)
        if k is None:
            return np.empty(0, dtype=np.int64)
        return self.order[self.starts[k] : self.ends[k]]

    def neighborhood(self, flat_code: int, reach: int) -> np.ndarray:
        """Member indices of all cells within `reach` cells (torus wrap)."""
        code = []
        c = flat_code
        for _ in range(self.d):
            code.append(c % self.ncells)
            c //= self.ncells
        code = code[::-1]
        offsets = np.arange(-reach, reach + 1)
        grids = np.meshgrid(*([offsets] * self.d), indexing="ij")
        shifts = np.stack([g.ravel() for g in grids], axis=1)
        cells = (np.asarray(code)[None, :] + shifts) % self.ncells
        flats = np.zeros(len(cells), dtype=np.int64)
        for j in range(self.d):
            flats = flats * self.ncells + cells[:, j]
        members = [self.cell_members(fc) for fc in np.unique(flats)]
        return np.concatenate(members) if members else np.empty(0, dtype=np.int64)


def _pairs_within_gauge(
    points: np.ndarray,
    body: ConvexBody,
    domain: TorusDomain,
    gauge_limit: float,
    index: _CellIndex,
):
    """Yield (i_array, j_array) chunks of pairs with gauge(min image) <= limit."""
    radius = gauge_limit * body.circumradius()
    reach = max(1, int(math.ceil(radius / index.side)))
    for k, fc in enumerate(index.uniq.tolist()):
        mine = index.order[index.starts[k] : index.ends[k]]
        cand = index.neighborhood(fc, reach)
        if len(cand) == 0:
            continue
        diffs = domain.min_image(points[mine][:, None, :] - points[cand][None, :, :])
        g = body.gauge(diffs)
        ii, jj = np.nonzero(g <= gauge_limit)
        gi, gj = mine[ii], cand[jj]
        keep = gi < gj
        if keep.any():
            yield gi[keep], gj[keep]


def build_graph(points: PointSet, body: ConvexBody, domain: TorusDomain) -> PackingGraph:
    """Intersection graph: edge iff gauge(min image(x - y)) <= 2.

    Built via a spatial hash with cell side at least circumradius(2K),
    scanning the surrounding cell neighborhood only.
    """
    domain.validate_for_body(body)
    pts = points.points
    min_side = body.scaled(2.0).circumradius()
    index = _CellIndex(pts, domain, min_side)
    halves: list[list] = [[] for _ in range(len(pts))]
    for gi, gj in _pairs_within_gauge(pts, body, domain, 2.0, index):
        for a, b in zip(gi.tolist(), gj.tolist()):
            halves[a].append(b)
            halves[b].append(a)
    nbrs = [np.unique(np.asarray(h, dtype=np.int64)) for h in halves]
    return PackingGraph(points=pts, neighbors=nbrs, domain=domain, cell_side=index.side)


def brute_force_graph(points: PointSet, body: ConvexBody, domain: TorusDomain) -> PackingGraph:
    """O(n^2) reference adjacency; oracle for build_graph."""
    pts = points.points
    n = len(pts)
    nbrs = [np.empty(0, dtype=np.int64) for _ in range(n)]
    if n:
        diffs = domain.min_image(pts[:, None, :] - pts[None, :, :])
        g = body.gauge(diffs)
        np.fill_diagonal(g, np.inf)
        adj = g <= 2.0
        nbrs = [np.flatnonzero(adj[i]).astype(np.int64) for i in range(n)]
    return PackingGraph(points=pts, neighbors=nbrs, domain=domain, cell_side=domain.L)


def graphs_equal(a: PackingGraph, b: PackingGraph) -> bool:
    return a.n == b.n and all(np.array_equal(x, y) for x, y in zip(a.neighbors, b.neighbors))


@dataclass(frozen=True)
class PruneReport:
    """Removal accounting for one prune pass.

    ``removed_x1/x2/x3`` count first-matching rule per vertex (rules
    ordered X1, X2, X3); ``removed_union`` is the size of the union.
    ``expected_sizes`` carries the theoretical expectation bounds for
    comparison (vacuous bounds reported as n).
    """

    n_initial: int
    removed_x1: int
    removed_x2: int
    removed_x3: int
    removed_union: int
    retained: int
    boundary_pairs: int
    expected_sizes: dict = field(default_factory=dict)


def _expectation_bounds(n, d, Delta, vol_ik, delta, coeff) -> dict:
    x1 = n * math.exp(-(max(Delta, 1.0) ** (2.0 / 3.0) - 1.0) / 3.0)
    x2 = n * min(1.0, Delta * vol_ik)
    m = delta * Delta  # codegree mean bound for pairs outside 2I
    k = coeff * Delta
    s3_tail = math.exp(-(k - m) / 3.0) if k >= 2.0 * m else 1.0
    s3 = min(float(n), n * 2.0**d * Delta * s3_tail)
    return {"x1_bound": x1, "x2_bound": x2, "s3_bound": s3}


def prune(
    graph: PackingGraph,
    body: ConvexBody,
    ik: IkProfile,
    Delta: float,
    codegree_coeff: float,
    domain: TorusDomain,
    rng: np.random.Generator | None = None,
) -> tuple[PackingGraph, PruneReport]:
    """Apply the X1/X2/X3 removal rules and return the pruned graph.

    Membership of a pair difference in 2 I_K is decided by the
    threshold test f((y - x)/2) > delta; boundary-ambiguous Monte Carlo
    classifications count as inside (removal), keeping the codegree
    guarantee sound.  Marking is a read-only pass over the original
    graph; the sweep rebuilds the subgraph afterwards.
    """
    if ik.body.d != body.d or ik.body.kind != body.kind:
        raise ValueError("IkProfile computed for a different body")
    n = graph.n
    if n == 0:
        report = PruneReport(0, 0, 0, 0, 0, 0, 0, _expectation_bounds(0, body.d, Delta, ik.vol_ik, ik.delta, codegree_coeff))
        return graph, report
    pts = graph.points
    clf = OverlapClassifier(body, ik.delta, rng)
    deg = graph.degree()
    mark_x1 = deg > Delta + Delta ** (2.0 / 3.0)

    # X2: endpoints of pairs with difference in 2I (f of half-difference > delta)
    mark_x2 = np.zeros(n, dtype=bool)
    pair_in_2i: dict[tuple[int, int], bool] = {}
    g_ik = ik_gauge_radius(body, ik.delta)
    index = _CellIndex(pts, domain, body.scaled(2.0).circumradius())
    if g_ik > 0.0:
        for gi, gj in _pairs_within_gauge(pts, body, domain, 2.0 * g_ik, index):
            diffs = domain.min_image(pts[gj] - pts[gi])
            inside = clf.inside(diffs / 2.0)
            for a, b, flag in zip(gi.tolist(), gj.tolist(), inside.tolist()):
                pair_in_2i[(a, b)] = flag
                if flag:
                    mark_x2[a] = mark_x2[b] = True

    # X3: pairs outside 2I with codegree >= coeff * Delta; candidate pairs
    # must share a neighbor, so they are exactly the nonzeros of A^2.
    mark_x3 = np.zeros(n, dtype=bool)
    threshold = codegree_coeff * Delta
    A = graph.adjacency_csr()
    C = (A @ A).tocoo()
    hot = (C.data >= threshold) & (C.row < C.col)
    for a, b in zip(C.row[hot].tolist(), C.col[hot].tolist()):
        key = (a, b)
        if key in pair_in_2i:
            inside = pair_in_2i[key]
        else:
            diff = domain.min_image(pts[b] - pts[a])
            inside = bool(clf.inside(diff[None, :] / 2.0)[0])
        if not inside:
            mark_x3[a] = mark_x3[b] = True

    removed = mark_x1 | mark_x2 | mark_x3
    first_x1 = int(mark_x1.sum())
    first_x2 = int((mark_x2 & ~mark_x1).sum())
    first_x3 = int((mark_x3 & ~mark_x1 & ~mark_x2).sum())
    pruned = graph.subgraph(~removed)
    report = PruneReport(
        n_initial=n,
        removed_x1=first_x1,
        removed_x2=first_x2,
        removed_x3=first_x3,
        removed_union=int(removed.sum()),
        retained=pruned.n,
        boundary_pairs=clf.boundary_count,
        expected_sizes=_expectation_bounds(n, body.d, Delta, ik.vol_ik, ik.delta, codegree_coeff),
    )
    return pruned, report


def degree_codegree_stats(graph: PackingGraph) -> dict:
    """Degree histogram plus max degree/codegree diagnostics."""
    deg = graph.degree()
    if graph.n == 0:
        return {"n": 0, "max_degree": 0, "mean_degree": 0.0, "max_codegree": 0, "degree_histogram": {}}
    A = graph.adjacency_csr()
    C = (A @ A).tocoo()
    off = C.row != C.col
    max_codeg = int(C.data[off].max()) if off.any() else 0
    hist = {int(k): int(v) for k, v in zip(*np.unique(deg, return_counts=True))}
    return {
        "n": graph.n,
        "max_degree": int(deg.max()),
        "mean_degree": float(deg.mean()),
        "max_codegree": max_codeg,
        "degree_histogram": hist,
    }


def brute_force_max_codegree(graph: PackingGraph) -> int:
    """Dense boolean-matmul codegree maximum; oracle for prune postconditions."""
    if graph.n == 0:
        return 0
    A = np.zeros((graph.n, graph.n), dtype=np.float32)
    for i, nb in enumerate(graph.neighbors):
        A[i, nb] = 1.0
    C = A @ A
    np.fill_diagonal(C, 0.0)
    return int(C.max())


def export_graph(graph: PackingGraph, path) -> None:
    """Plain-text export: `v <idx> <coords...>` then `e <i> <j>` lines."""
    with open(path, "w") as fh:
        for i, pt in enumerate(graph.points):
            fh.write("v " + str(i) + " " + " ".join(repr(float(c)) for c in pt) + "\n")
        for i, nb in enumerate(graph.neighbors):
            for j in nb:
                if i < j:
                    fh.write(f"e {i} {int(j)}\n")


def import_graph(path, domain: TorusDomain) -> PackingGraph:
    verts = {}
    edges = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts[int(parts[1])] = [float(c) for c in parts[2:]]
            elif parts[0] == "e":
                edges.append((int(parts[1]), int(parts[2])))
    n = len(verts)
    pts = np.asarray([verts[i] for i in range(n)])
    halves: list[list] = [[] for _ in range(n)]
    for i, j in edges:
        halves[i].append(j)
        halves[j].append(i)
    nbrs = [np.unique(np.asarray(h, dtype=np.int64)) for h in halves]
    return PackingGraph(points=pts, neighbors=nbrs, domain=domain, cell_side=domain.L)
