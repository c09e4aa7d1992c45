"""Gromov products, four-point hyperbolicity, Busemann functions and the
Hamenstädt metric on the punctured boundary."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .geometry import anchor_points
from .graph import GraphError, MetricGraph, distances_from
from .qhyp import NEAR_BOUNDARY_CELLS

DELTA_FLOOR = 0.1
EXHAUSTIVE_LIMIT = 2_000_000


class AnchorError(GraphError):
    pass


class ProxyError(GraphError):
    pass


def _vertex(g, p):
    return int(p) if isinstance(p, (int, np.integer)) else g.snap(p)[0]


def gromov_product(g, x, y, o):
    """(x|y)_o = (k(x,o) + k(y,o) - k(x,y)) / 2 on the graph."""
    vx, vy, vo = _vertex(g, x), _vertex(g, y), _vertex(g, o)
    rows = distances_from(g, [vo, vx])
    kxo, kyo, kxy = rows[0, vx], rows[0, vy], rows[1, vy]
    if not np.isfinite([kxo, kyo, kxy]).all():
        raise GraphError("disconnected: gromov product of points in different components")
    return 0.5 * (kxo + kyo - kxy)


# ----------------------------------------------------------------------
# hyperbolicity

@dataclass
class DeltaEstimate:
    delta: float
    quadruples: int
    mode: str
    h: float | None
    seed: int
    witness: tuple = ()
    points: np.ndarray | None = None


def four_point_defects(D, quads):
    """Largest hyperbolicity defect of each quadruple over role assignments.

    For pair sums S1 >= S2 >= S3 this is (S1 - S2) / 2, which equals the
    maximum over base points of min((x|z)_o, (z|y)_o) - (x|y)_o.
    """
    a, b, c, d = quads.T
    s = np.stack([D[a, b] + D[c, d], D[a, c] + D[b, d], D[a, d] + D[b, c]], axis=1)
    s.sort(axis=1)
    return 0.5 * (s[:, 2] - s[:, 1])


def delta_from_distances(D, n_quadruples=None, seed=0, chunk=200_000):
    m = len(D)
    if m < 4:
        raise ValueError("need at least four points")
    total = math.comb(m, 4)
    rng = np.random.default_rng(seed)
    best, arg = 0.0, ()
    if n_quadruples is None and total <= EXHAUSTIVE_LIMIT:
        mode, count = "exhaustive-on-subsample", total
        it = combinations(range(m), 4)
        while True:
            block = np.fromiter((i for q in _take(it, chunk) for i in q), dtype=np.int64)
            if block.size == 0:
                break
            quads = block.reshape(-1, 4)
            best, arg = _reduce(D, quads, best, arg)
    else:
        mode = "seeded-random"
        count = int(n_quadruples or EXHAUSTIVE_LIMIT)
        done = 0
        while done < count:
            k = min(chunk, count - done)
            quads = _random_quads(rng, m, k)
            best, arg = _reduce(D, quads, best, arg)
            done += k
    return max(best, 0.0), count, mode, arg


def _take(it, n):
    for _, q in zip(range(n), it):
        yield q


def _random_quads(rng, m, k):
    q = rng.integers(0, m, size=(k, 4))
    # resample rows with repeated indices so quadruples have distinct points
    while True:
        srt = np.sort(q, axis=1)
        dup = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
        if not dup.any():
            return q
        q[dup] = rng.integers(0, m, size=(int(dup.sum()), 4))


def _reduce(D, quads, best, arg):
    defects = four_point_defects(D, quads)
    j = int(np.argmax(defects))
    if defects[j] > best:
        return float(defects[j]), tuple(int(i) for i in quads[j])
    return best, arg


def sample_vertices(g, count, seed, min_depth=None, margin=0.2, box=None):
    """Seeded vertices away from the boundary and from artificial window faces."""
    min_depth = NEAR_BOUNDARY_CELLS * g.h if min_depth is None else min_depth
    ok = g.depth >= min_depth
    ok &= g.domain.in_window(g.coords, margin)
    if box is not None:
        box = np.asarray(box, float)
        ok &= np.all((g.coords >= box[0]) & (g.coords <= box[1]), axis=1)
    cand = np.nonzero(ok)[0]
    if len(cand) < count:
        raise GraphError(f"only {len(cand)} admissible vertices for a sample of {count}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(cand, size=count, replace=False))


def estimate_delta(g, sample_size, seed, n_quadruples=None, points=None,
                   weighting="quasihyperbolic", **sample_kw):
    """Four-point delta over a sample of vertices (or of a generic sparse graph).

    The distance matrix of the sample is computed once.  Small samples are
    scanned exhaustively; otherwise ``n_quadruples`` seeded quadruples are used.
    """
    if sample_size < 4:
        raise ValueError("sample_size must be at least 4")
    if isinstance(g, MetricGraph):
        if points is not None:
            verts = g.snap_many(points)
        else:
            verts = sample_vertices(g, sample_size, seed, **sample_kw)
        D = distances_from(g, verts, weighting)[:, verts]
        h = g.h
        coords = g.coords[verts]
    else:
        mat = sparse.csr_matrix(g)
        n = mat.shape[0]
        rng = np.random.default_rng(seed)
        verts = np.arange(n) if sample_size >= n else np.sort(rng.choice(n, sample_size, replace=False))
        D = csgraph.dijkstra(mat, directed=False, indices=verts)[:, verts]
        h = None
        coords = None
    if not np.all(np.isfinite(D)):
        raise GraphError("disconnected sample: some sampled points are in different components")
    delta, count, mode, arg = delta_from_distances(D, n_quadruples, seed)
    witness = tuple(int(verts[i]) for i in arg)
    return DeltaEstimate(delta, count, mode, h, seed, witness, coords)


# ----------------------------------------------------------------------
# Busemann functions

@dataclass(eq=False)
class BusemannField:
    """Anchor-differenced Busemann function b(v) ~ k(v, z_R) - k(o, z_R)."""

    base: np.ndarray
    base_vertex: int
    anchor: object
    R: float
    values: np.ndarray
    values_far: np.ndarray
    anchor_vertices: tuple
    snap_slack: float

    @property
    def gap(self):
        return np.abs(self.values - self.values_far)

    def at(self, g, p):
        return float(self.values[_vertex(g, p)])


def snap_slack(g, p):
    """Upper bound for k(p, v) with v the vertex p snaps to (2|p-v|/d(v))."""
    v, r = g.snap(p)
    return 2.0 * r / g.depth[v]


def busemann_field(g, o, anchor, R):
    z1 = anchor_points(g.domain, anchor, R)
    z2 = anchor_points(g.domain, anchor, 2 * R)
    for z in (z1, z2):
        if not (g.domain.in_window(z)[0] and g.domain.contains(z)):
            raise AnchorError(f"anchor point {np.round(z, 6).tolist()} lies outside the window")
    vo = _vertex(g, o)
    v1, v2 = g.snap(z1)[0], g.snap(z2)[0]
    rows = distances_from(g, [v1, v2])
    if not np.isfinite(rows[:, vo]).all():
        raise AnchorError("anchor and base point lie in different components")
    b1 = rows[0] - rows[0, vo]
    b2 = rows[1] - rows[1, vo]
    slack = 2 * (snap_slack(g, o) + max(snap_slack(g, z1), snap_slack(g, z2)))
    return BusemannField(np.asarray(g.coords[vo]), vo, anchor, float(R), b1, b2, (v1, v2), slack)


def gromov_product_busemann(field, g, x, y):
    """(x|y)_b = (b(x) + b(y) - k(x, y)) / 2."""
    vx, vy = _vertex(g, x), _vertex(g, y)
    kxy = distances_from(g, [vx])[0, vy]
    return 0.5 * (field.values[vx] + field.values[vy] - kxy)


def choose_epsilon(delta, floor=DELTA_FLOOR):
    """Largest epsilon with exp(22 * epsilon * delta) <= 2."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return math.log(2.0) / (22.0 * max(delta, floor))


# ----------------------------------------------------------------------
# Hamenstädt metric

@dataclass(eq=False)
class BoundaryMetricTable:
    points: np.ndarray
    proxies: np.ndarray
    proxy_depth: np.ndarray
    gp: np.ndarray      # (eta|zeta)_b at the proxies
    eps: float
    rho: np.ndarray
    d: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            dim = self.points.shape[1]
            w.writerow(["i", "j"] + [f"xi{k}" for k in range(dim)] + [f"xj{k}" for k in range(dim)]
                       + ["gp_b", "rho", "d"])
            m = len(self.points)
            for i in range(m):
                for j in range(m):
                    w.writerow([i, j, *map(repr, self.points[i].tolist()), *map(repr, self.points[j].tolist()),
                                repr(float(self.gp[i, j])), repr(float(self.rho[i, j])), repr(float(self.d[i, j]))])


def chain_metric(rho):
    """Infimum of rho-sums over chains: all-pairs shortest paths on the
    complete graph, iterated until the closure is a fixed point."""
    d = np.array(rho, dtype=float, copy=True)
    np.fill_diagonal(d, 0.0)
    n = len(d)
    while True:
        before = d.copy()
        for k in range(n):
            np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :], out=d)
        if np.array_equal(before, d):
            return d


def boundary_proxy(g, q, max_depth=None):
    """Vertex nearest to the boundary point q, required to sit within 3h of the boundary."""
    max_depth = NEAR_BOUNDARY_CELLS * g.h if max_depth is None else max_depth
    v, _ = g.snap(q)
    if g.depth[v] > max_depth:
        raise ProxyError(f"no proxy within depth {max_depth:g} for boundary point {np.round(q, 6).tolist()}")
    return v


def hamenstadt_table(field, g, boundary_pts, eps):
    pts = np.atleast_2d(np.asarray(boundary_pts, float))
    if len(np.unique(pts, axis=0)) != len(pts):
        raise ValueError("boundary points must be distinct")
    prox = np.array([boundary_proxy(g, q) for q in pts], dtype=int)
    K = distances_from(g, prox)[:, prox]
    b = field.values[prox]
    gp = 0.5 * (b[:, None] + b[None, :] - K)
    rho = np.exp(-eps * gp)
    d = chain_metric(rho)
    return BoundaryMetricTable(pts, prox, g.depth[prox], gp, float(eps), rho, d)
