"""Discrete p-modulus of curve families joining two vertex sets."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass

import clarabel
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve
from scipy.spatial.distance import cdist

from .graph import GraphError, build_graph

log = logging.getLogger(__name__)


@dataclass(eq=False)
class ModulusProblem:
    """Vertex densities with per-vertex measure; curves are graph paths from E to F.

    ``lengths`` are per-edge lengths in the metric the curves are measured
    in; the line integral of a density along an edge is length * mean of
    the endpoint densities.
    """

    graph: object
    E: np.ndarray
    F: np.ndarray
    p: float
    lengths: np.ndarray
    measure: np.ndarray
    region: np.ndarray | None = None
    tol: float = 1e-3

    def __post_init__(self):
        self.E = np.unique(np.asarray(self.E, dtype=int))
        self.F = np.unique(np.asarray(self.F, dtype=int))
        if self.E.size == 0 or self.F.size == 0:
            raise ValueError("E and F must be nonempty")
        if np.intersect1d(self.E, self.F).size:
            raise ValueError("E and F must be disjoint")
        if not self.p > 1:
            raise ValueError("modulus exponent must exceed 1")


@dataclass
class ModulusSolution:
    value: float
    density: np.ndarray
    paths: list
    gap: float
    lower: float
    iterations: int
    min_length: float
    empty_family: bool = False

    def to_json(self):
        return json.dumps({"value": self.value, "gap": self.gap, "lower": self.lower,
                           "iterations": self.iterations, "min_length": self.min_length,
                           "active_paths": len(self.paths), "empty_family": self.empty_family},
                          sort_keys=True, indent=2)

    def density_csv(self, coords):
        lines = ["id," + ",".join(f"x{i}" for i in range(coords.shape[1])) + ",rho"]
        for i, (c, r) in enumerate(zip(coords, self.density)):
            lines.append(",".join([str(i), *map(repr, c.tolist()), repr(float(r))]))
        return "\n".join(lines) + "\n"


def euclidean_problem(g, E, F, p=None, region=None, tol=1e-3):
    p = g.dim if p is None else p
    return ModulusProblem(g, E, F, p, g.euclid_len, np.full(g.n_vertices, g.cell_measure), region, tol)


def deformed_problem(dg, E, F, p=None, region=None, tol=1e-3):
    g = dg.base
    p = g.dim if p is None else p
    return ModulusProblem(dg.graph, E, F, p, dg.graph.deformed_weight, dg.mu_cell, region, tol)


def _restricted(prob):
    """Edges usable by curves, and the vertices reachable from E or F through them."""
    g = prob.graph
    e = g.edges
    keep = np.ones(len(e), bool)
    if prob.region is not None:
        reg = np.zeros(g.n_vertices, bool)
        reg[np.asarray(prob.region)] = True
        reg[prob.E] = True
        reg[prob.F] = True
        keep = reg[e[:, 0]] & reg[e[:, 1]]
    return e[keep], prob.lengths[keep]


def _sym(n, u, v, w):
    return sparse.csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                             shape=(n, n))


def shortest_lengths(prob, rho, edges=None, L=None):
    """rho-length of the shortest E-F path through each vertex, with predecessor trees."""
    if edges is None:
        edges, L = _restricted(prob)
    u, v = edges[:, 0], edges[:, 1]
    # strictly positive so zero-density edges still count as edges
    mat = _sym(prob.graph.n_vertices, u, v, L * (0.5 * (rho[u] + rho[v]) + 1e-12))
    dE, pE, _ = csgraph.dijkstra(mat, directed=False, indices=prob.E, min_only=True, return_predecessors=True)
    dF, pF, _ = csgraph.dijkstra(mat, directed=False, indices=prob.F, min_only=True, return_predecessors=True)
    return dE + dF, pE, pF


def _path_through(v, pE, pF):
    left = [v]
    while pE[left[-1]] >= 0:
        left.append(pE[left[-1]])
    right = [v]
    while pF[right[-1]] >= 0:
        right.append(pF[right[-1]])
    return np.array(left[::-1] + right[1:], dtype=int)


def _conic_program(prob, verts, edges, L):
    """Potential form of the modulus program.

    Minimise sum m rho^p over (phi, rho) with phi = 0 on E, phi = 1 on F and
    |phi_u - phi_v| <= L_e (rho_u + rho_v) / 2 on every edge.  A density is
    admissible for all E-F paths exactly when such a potential exists.
    """
    k = len(verts)
    loc = np.full(prob.graph.n_vertices, -1)
    loc[verts] = np.arange(k)
    u, v = loc[edges[:, 0]], loc[edges[:, 1]]
    c = 0.5 * L
    ne = len(edges)
    p = float(prob.p)
    m = prob.measure[verts]
    quad = abs(p - 2.0) < 1e-12
    nx = 2 * k if quad else 3 * k
    iphi, irho, it = np.arange(k), k + np.arange(k), 2 * k + np.arange(k)

    bnd = np.concatenate([loc[prob.E], loc[prob.F]])
    bval = np.concatenate([np.zeros(len(prob.E)), np.ones(len(prob.F))])
    rows, cols, vals, b = [], [], [], []

    def block(r, cc, vv):
        rows.append(r)
        cols.append(cc)
        vals.append(vv)

    r0 = 0
    block(r0 + np.arange(len(bnd)), iphi[bnd], np.ones(len(bnd)))
    b.append(bval)
    r0 += len(bnd)
    er = r0 + np.arange(ne)
    for sgn in (1.0, -1.0):
        er = r0 + np.arange(ne)
        block(er, iphi[u], np.full(ne, sgn))
        block(er, iphi[v], np.full(ne, -sgn))
        block(er, irho[u], -c)
        block(er, irho[v], -c)
        b.append(np.zeros(ne))
        r0 += ne
    block(r0 + np.arange(k), irho, -np.ones(k))
    b.append(np.zeros(k))
    r0 += k
    cones = [clarabel.ZeroConeT(len(bnd)), clarabel.NonnegativeConeT(2 * ne + k)]
    if quad:
        P = sparse.csc_matrix((2.0 * m, (irho, irho)), shape=(nx, nx))
        q = np.zeros(nx)
    else:
        # (t_v, 1, rho_v) in the power cone with exponent 1/p: rho_v^p <= t_v
        P = sparse.csc_matrix((nx, nx))
        q = np.concatenate([np.zeros(2 * k), m])
        tri = r0 + 3 * np.arange(k)
        block(tri, it, -np.ones(k))
        block(tri + 2, irho, -np.ones(k))
        bb = np.zeros(3 * k)
        bb[1::3] = 1.0
        b.append(bb)
        r0 += 3 * k
        cones += [clarabel.PowerConeT(1.0 / p)] * k
    A = sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(r0, nx))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_rel = 1e-7
    settings.tol_gap_abs = 1e-9
    sol = clarabel.DefaultSolver(sparse.triu(P).tocsc(), q, A, np.concatenate(b), cones, settings).solve()
    x = np.asarray(sol.x)
    z = np.asarray(sol.z)
    off = len(bnd)
    flow = z[off:off + ne] - z[off + ne:off + 2 * ne]
    return x[irho], flow, int(sol.iterations), str(sol.status)


def _flow_lower_bound(prob, verts, edges, L, flow):
    """Dual value of an E-F flow after projecting out its divergence at
    interior vertices; weak duality makes it a lower bound for the modulus."""
    n = prob.graph.n_vertices
    ne = len(edges)
    B = sparse.csr_matrix((np.concatenate([np.ones(ne), -np.ones(ne)]),
                           (np.concatenate([edges[:, 0], edges[:, 1]]), np.tile(np.arange(ne), 2))),
                          shape=(n, ne))
    inner = np.setdiff1d(verts, np.concatenate([prob.E, prob.F]))
    if inner.size:
        Bi = B[inner]
        lap = (Bi @ Bi.T).tocsc()
        x = spsolve(lap, Bi @ flow)
        flow = flow - Bi.T @ np.atleast_1d(x)
    div = B @ flow
    p = float(prob.p)
    qexp = p / (p - 1.0)
    load = np.zeros(n)
    np.add.at(load, edges[:, 0], 0.5 * L * np.abs(flow))
    np.add.at(load, edges[:, 1], 0.5 * L * np.abs(flow))
    m = prob.measure
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = (p - 1.0) * float(np.sum(np.where(load > 0, m * (load / (p * m)) ** qexp, 0.0)))
    t = abs(float(div[prob.F].sum()))
    # the best multiple of the flow: max_s s*t - s^q * cost
    if cost <= 0 or t <= 0:
        return 0.0
    s = (t / (qexp * cost)) ** (1.0 / (qexp - 1.0))
    return max(s * t - s ** qexp * cost, 0.0)


def discrete_modulus(prob, gap_tol=0.05, n_paths=32):
    """Discrete p-modulus of the E-F path family.

    The convex program is solved in potential form with an interior-point
    conic solver.  The returned value is the energy of the solver density
    rescaled so that its shortest E-F path has length exactly 1 (an upper
    bound); ``lower`` is the dual value of the solver flow.
    """
    edges, L = _restricted(prob)
    n = prob.graph.n_vertices
    mat0 = _sym(n, edges[:, 0], edges[:, 1], L)
    _, labels = csgraph.connected_components(mat0, directed=False)
    reach = np.intersect1d(labels[prob.E], labels[prob.F])
    if not reach.size:
        return ModulusSolution(0.0, np.zeros(n), [], 0.0, 0.0, 0, np.inf, empty_family=True)
    verts = np.nonzero(np.isin(labels, reach))[0]
    keep = np.isin(labels[edges[:, 0]], reach)
    edges, L = edges[keep], L[keep]
    # E or F vertices outside the reachable components carry no curves
    sub = dataclasses.replace(prob, E=np.intersect1d(prob.E, verts), F=np.intersect1d(prob.F, verts))

    rho_v, flow, iters, status = _conic_program(sub, verts, edges, L)
    rho = np.zeros(n)
    rho[verts] = np.maximum(rho_v, 0.0)
    through, pE, pF = shortest_lengths(sub, rho, edges, L)
    Lmin = float(np.min(through))
    if not (np.isfinite(Lmin) and Lmin > 0):
        raise RuntimeError(f"modulus solver returned an inadmissible density ({status})")
    rho /= Lmin
    upper = float(np.sum(prob.measure * rho ** prob.p))
    lower = min(_flow_lower_bound(sub, verts, edges, L, flow), upper)
    gap = (upper - lower) / upper if upper > 0 else 0.0
    if gap > gap_tol:
        log.warning("modulus duality gap %.3g exceeds %.3g (%s)", gap, gap_tol, status)
    # extremal paths: shortest paths through a spread of the tight vertices
    through = through / Lmin
    tight = np.nonzero(through <= 1.0 + prob.tol)[0]
    tight = tight[np.argsort(-rho[tight], kind="stable")]
    pick = tight[np.unique(np.linspace(0, len(tight) - 1, min(n_paths, len(tight))).astype(int))]
    paths, seen = [], set()
    for v in pick:
        path = _path_through(v, pE, pF)
        if path.tobytes() not in seen:
            seen.add(path.tobytes())
            paths.append(path)
    log.debug("modulus: %s after %d iterations, gap %.3g", status, iters, gap)
    return ModulusSolution(upper, rho, paths, gap, lower, iters, 1.0)


# ----------------------------------------------------------------------

def separation_ratio(E, F, metric="euclidean"):
    """dist(E, F) / min(diam E, diam F) for point sets under a metric.

    ``metric`` is "euclidean" or a callable returning the distance matrix
    between two point arrays.
    """
    E = np.atleast_2d(np.asarray(E, float))
    F = np.atleast_2d(np.asarray(F, float))
    if metric == "euclidean":
        dEF = cdist(E, F)
        dEE = cdist(E, E)
        dFF = cdist(F, F)
    else:
        dEF, dEE, dFF = metric(E, F), metric(E, E), metric(F, F)
    diam = min(dEE.max(), dFF.max())
    if not diam > 0:
        raise ValueError("degenerate continuum: zero diameter")
    return float(dEF.min() / diam)


def segment_vertices(g, a, b, width=None):
    """Vertices within ``width`` (default h/2 * sqrt(dim)) of the segment a-b."""
    from .geometry import segment_distance
    width = 0.5 * g.h * np.sqrt(g.dim) if width is None else width
    dist = segment_distance(g.coords, np.atleast_2d(a), np.atleast_2d(b))[:, 0]
    return np.nonzero(dist <= width)[0]


def loewner_probe(dom, t_values, seed, h=0.1, pairs=24, length=(0.3, 1.0), g=None, box=None):
    """Smallest observed modulus over seeded segment pairs with separation <= t.

    The result for each t is an upper bound for the Loewner function there.
    """
    t_values = np.asarray(t_values, float)
    if np.any(t_values <= 0):
        raise ValueError("t values must be positive")
    g = build_graph(dom, h) if g is None else g
    rng = np.random.default_rng(seed)
    lo, hi = dom.window if box is None else np.asarray(box, float)
    found = []
    tries = 0
    while len(found) < pairs and tries < 200 * pairs:
        tries += 1
        segs = []
        for _ in range(2):
            c = rng.uniform(lo, hi)
            ang = rng.uniform(0, np.pi)
            ln = rng.uniform(*length)
            u = 0.5 * ln * np.array([np.cos(ang), np.sin(ang)])
            segs.append((c - u, c + u))
        (a0, a1), (b0, b1) = segs
        ok = dom.contains(np.array([a0, a1, b0, b1]))
        if not np.all(ok):
            continue
        E = segment_vertices(g, a0, a1)
        F = segment_vertices(g, b0, b1)
        if E.size < 2 or F.size < 2 or np.intersect1d(E, F).size:
            continue
        delta = separation_ratio(g.coords[E], g.coords[F])
        sol = discrete_modulus(euclidean_problem(g, E, F))
        found.append((delta, sol.value))
    if not found:
        raise GraphError("no admissible continuum pairs in the window")
    found.sort()
    out = []
    for t in t_values:
        vals = [m for d, m in found if d <= t]
        if not vals:
            raise GraphError(f"no pair achieves separation <= {t:g}")
        out.append((float(t), float(min(vals))))
    return out
