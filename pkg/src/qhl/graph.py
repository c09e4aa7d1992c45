"""Grid discretization of a domain and exact shortest paths on it."""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

MAX_VERTICES = 20_000_000
WEIGHTINGS = ("euclidean", "quasihyperbolic", "deformed")


class GraphError(ValueError):
    pass


class DisconnectedError(GraphError):
    def __init__(self, comp_x, comp_y):
        super().__init__(f"disconnected: endpoints lie in components {comp_x} and {comp_y}")
        self.components = (comp_x, comp_y)


def stencil_offsets(stencil, dim):
    """Half of the symmetric neighbour offsets (the other half is implied)."""
    if dim == 2 and stencil in (8, 16):
        offs = [(1, 0), (0, 1), (1, 1), (1, -1)]
        if stencil == 16:
            offs += [(2, 1), (1, 2), (2, -1), (1, -2)]
        return np.array(offs)
    if dim == 3 and stencil == 26:
        offs = [o for o in itertools.product((-1, 0, 1), repeat=3) if o > (0, 0, 0)]
        return np.array(offs)
    raise GraphError(f"unsupported stencil {stencil} in dimension {dim}")


def worker_count():
    try:
        return max(1, int(os.environ.get("QHL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(eq=False)
class MetricGraph:
    domain: object
    h: float
    stencil: int
    origin: np.ndarray      # lattice point with index 0
    shape: tuple            # lattice extent per axis
    index: np.ndarray       # lattice integer index per vertex, (N, dim)
    coords: np.ndarray      # (N, dim)
    depth: np.ndarray       # d(v) per vertex
    edges: np.ndarray       # (M, 2) vertex pairs, u < v
    euclid_len: np.ndarray  # (M,)
    qh_weight: np.ndarray   # (M,)
    deformed_weight: np.ndarray | None = None

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def cell_measure(self):
        return self.h ** self.dim

    def _sym(self, w):
        n = self.n_vertices
        u, v = self.edges[:, 0], self.edges[:, 1]
        m = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                              shape=(n, n))
        return m.tocsr()

    @cached_property
    def _matrices(self):
        return {}

    def matrix(self, weighting):
        if weighting not in WEIGHTINGS:
            raise GraphError(f"unknown weighting {weighting!r}")
        if weighting not in self._matrices:
            w = {"euclidean": self.euclid_len, "quasihyperbolic": self.qh_weight,
                 "deformed": self.deformed_weight}[weighting]
            if w is None:
                raise GraphError("graph carries no deformed weights; use deform() first")
            self._matrices[weighting] = self._sym(w)
        return self._matrices[weighting]

    def edge_weights(self, weighting):
        return {"euclidean": self.euclid_len, "quasihyperbolic": self.qh_weight,
                "deformed": self.deformed_weight}[weighting]

    @cached_property
    def components(self):
        _, labels = csgraph.connected_components(self.matrix("euclidean"), directed=False)
        return labels

    @cached_property
    def _tree(self):
        return cKDTree(self.coords)

    @cached_property
    def _lookup(self):
        table = np.full(self.shape, -1, dtype=np.int64)
        table[tuple(self.index.T)] = np.arange(self.n_vertices)
        return table

    def vertex_at(self, idx):
        idx = np.asarray(idx)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            return -1
        return int(self._lookup[tuple(idx)])

    def snap(self, p):
        """Nearest vertex to p and the snap radius |p - v|."""
        p = np.asarray(p, float)
        idx = np.rint((p - self.origin) / self.h).astype(int)
        v = self.vertex_at(idx)
        if v >= 0:
            r = float(np.linalg.norm(self.coords[v] - p))
            if r <= 0.5 * self.h * np.sqrt(self.dim) + 1e-12:
                return v, r
        r, v = self._tree.query(p)
        return int(v), float(r)

    def snap_many(self, pts):
        return np.array([self.snap(p)[0] for p in np.atleast_2d(pts)], dtype=int)

    def edge_lookup(self, weighting):
        return self.matrix(weighting)

    def to_csv(self, vertices_path, edges_path):
        with open(vertices_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"x{i}" for i in range(self.dim)] + ["d"])
            for i, (c, d) in enumerate(zip(self.coords, self.depth)):
                w.writerow([i, *map(repr, c.tolist()), repr(float(d))])
        with open(edges_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "euclid_len", "qh_weight"])
            for (u, v), el, qw in zip(self.edges, self.euclid_len, self.qh_weight):
                w.writerow([int(u), int(v), repr(float(el)), repr(float(qw))])


@dataclass(eq=False)
class Path:
    graph: MetricGraph
    vertices: np.ndarray
    lengths: dict = field(default_factory=dict)

    @property
    def coords(self):
        return self.graph.coords[self.vertices]

    def length(self, weighting):
        if weighting not in self.lengths:
            self.lengths[weighting] = float(self.edge_lengths(weighting).sum())
        return self.lengths[weighting]

    def edge_lengths(self, weighting):
        if len(self.vertices) < 2:
            return np.zeros(0)
        m = self.graph.matrix(weighting)
        return np.asarray(m[self.vertices[:-1], self.vertices[1:]]).ravel()

    def cumulative(self, weighting):
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths(weighting))])

    @cached_property
    def diameter(self):
        return path_diameter(self)

    def __len__(self):
        return len(self.vertices)


# ----------------------------------------------------------------------

def _lattice(dom, h):
    lo, hi = dom.window
    shape = tuple(int(np.floor((hi[i] - lo[i]) / h + 1e-9)) + 1 for i in range(dom.dim))
    total = int(np.prod(shape, dtype=np.int64))
    if total > MAX_VERTICES:
        raise GraphError(f"grid of {total} lattice points exceeds the budget of {MAX_VERTICES}")
    return lo.copy(), shape


def _certify_segments(dom, a, b, da, db, max_level=6):
    """True where the segment a-b provably lies inside the domain.

    Uses the 1-Lipschitz depth: a sub-segment is covered by the two balls
    B(p, d(p)), B(q, d(q)) when d(p) + d(q) > |p - q|.  Uncertified pieces
    are bisected; anything still uncertified after ``max_level`` is rejected.
    """
    ok = np.ones(len(a), bool)
    idx = np.arange(len(a))
    p, q, dp, dq = a, b, da, db
    for _ in range(max_level + 1):
        covered = dp + dq > np.linalg.norm(q - p, axis=1) * (1 + 1e-12)
        if np.all(covered):
            return ok
        bad = ~covered
        idx, p, q, dp, dq = idx[bad], p[bad], q[bad], dp[bad], dq[bad]
        m = 0.5 * (p + q)
        dm = dom.depth(m)
        hit = dm <= 0
        ok[idx[hit]] = False
        live = ~hit & ok[idx]
        idx, p, q, dp, dq, m, dm = idx[live], p[live], q[live], dp[live], dq[live], m[live], dm[live]
        idx = np.concatenate([idx, idx])
        p, q = np.concatenate([p, m]), np.concatenate([m, q])
        dp, dq = np.concatenate([dp, dm]), np.concatenate([dm, dq])
    ok[idx] = False
    return ok


def build_graph(dom, h, stencil=None):
    """Grid graph on the window with vertices at depth >= h/2.

    Edges come from the stencil and are kept only when the segment is
    certified inside the domain.  The quasihyperbolic weight of an edge is
    the trapezoid rule for the integral of ds/d along it.
    """
    if not h > 0:
        raise GraphError("grid spacing must be positive")
    if stencil is None:
        stencil = 16 if dom.dim == 2 else 26
    offs = stencil_offsets(stencil, dom.dim)
    origin, shape = _lattice(dom, h)

    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    index = np.stack([g.ravel() for g in grids], axis=1)
    coords = origin + h * index
    depth = dom.depth(coords)
    keep = depth >= 0.5 * h
    if not np.any(keep):
        raise GraphError("no lattice point lies deep enough inside the domain")
    index, coords, depth = index[keep], coords[keep], depth[keep]

    table = np.full(shape, -1, dtype=np.int64)
    table[tuple(index.T)] = np.arange(len(index))

    us, vs = [], []
    shp = np.asarray(shape)
    for off in offs:
        nb = index + off
        inside = np.all((nb >= 0) & (nb < shp), axis=1)
        src = np.nonzero(inside)[0]
        dst = table[tuple(nb[inside].T)]
        ok = dst >= 0
        src, dst = src[ok], dst[ok]
        good = _certify_segments(dom, coords[src], coords[dst], depth[src], depth[dst])
        us.append(src[good])
        vs.append(dst[good])
    u = np.concatenate(us)
    v = np.concatenate(vs)
    lo_, hi_ = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi_, lo_))
    edges = np.column_stack([lo_[order], hi_[order]])
    elen = np.linalg.norm(coords[edges[:, 1]] - coords[edges[:, 0]], axis=1)
    qh = elen * 0.5 * (1.0 / depth[edges[:, 0]] + 1.0 / depth[edges[:, 1]])
    return MetricGraph(dom, float(h), stencil, origin, shape, index, coords, depth, edges, elen, qh)


# ----------------------------------------------------------------------
# shortest paths

def _resolve(g, p):
    if isinstance(p, (int, np.integer)):
        return int(p)
    return g.snap(p)[0]


def distances_from(g, sources, weighting="quasihyperbolic", matrix=None):
    """Rows of graph distances from each source vertex, (len(sources), N)."""
    m = g.matrix(weighting) if matrix is None else matrix
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    workers = worker_count()
    if workers == 1 or len(sources) < 2 * workers:
        return csgraph.dijkstra(m, directed=False, indices=sources)
    chunks = np.array_split(sources, workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda c: csgraph.dijkstra(m, directed=False, indices=c), chunks))
    return np.vstack(parts)


def _walk_back(pred, s, t):
    out = [t]
    while out[-1] != s:
        nxt = pred[out[-1]]
        if nxt < 0:
            raise GraphError("broken predecessor chain")
        out.append(nxt)
    return np.array(out[::-1], dtype=int)


def shortest_path(g, x, y, weighting="quasihyperbolic", matrix=None):
    """Weight-minimal path between the vertices nearest to x and y."""
    sx, sy = _resolve(g, x), _resolve(g, y)
    comp = g.components
    if comp[sx] != comp[sy]:
        raise DisconnectedError(int(comp[sx]), int(comp[sy]))
    if sx == sy:
        return Path(g, np.array([sx]), {w: 0.0 for w in WEIGHTINGS})
    m = g.matrix(weighting) if matrix is None else matrix
    dist, pred = csgraph.dijkstra(m, directed=False, indices=sx, return_predecessors=True)
    if not np.isfinite(dist[sy]):
        raise DisconnectedError(int(comp[sx]), int(comp[sy]))
    path = Path(g, _walk_back(pred, sx, sy))
    if matrix is None:
        path.lengths[weighting] = float(dist[sy])
    return path


def inner_distance(g, x, y):
    """Inner (length) metric of the domain, realised on the graph."""
    return shortest_path(g, x, y, "euclidean").length("euclidean")


def path_diameter(p):
    c = p.coords
    if len(c) < 2:
        return 0.0
    return float(pdist(c).max())
