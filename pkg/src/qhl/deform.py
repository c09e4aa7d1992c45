"""Conformal deformation of the quasihyperbolic metric by exp(-eps * b)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .graph import GraphError, MetricGraph, distances_from, shortest_path
from .qhyp import NEAR_BOUNDARY_CELLS


@dataclass(eq=False)
class DeformedGraph:
    graph: MetricGraph        # copy of the base graph carrying deformed edge weights
    base: MetricGraph
    field: object
    eps: float
    rho: np.ndarray           # exp(-eps * b) per vertex
    d_eps: np.ndarray         # distance to the boundary of the deformed space
    tail: np.ndarray          # analytic tail used at the nearest proxy
    nearest_proxy: np.ndarray
    proxies: np.ndarray

    @property
    def h(self):
        return self.base.h

    @property
    def mu_cell(self):
        n = self.base.dim
        return (self.rho / self.base.depth) ** n * self.base.h ** n

    @property
    def keps_weight(self):
        e = self.base.edges
        return self.graph.deformed_weight * 0.5 * (1.0 / self.d_eps[e[:, 0]] + 1.0 / self.d_eps[e[:, 1]])

    def keps_matrix(self):
        if not hasattr(self, "_keps"):
            if not np.all(np.isfinite(self.d_eps) & (self.d_eps > 0)):
                raise GraphError("deformed boundary distance undefined at some vertex")
            self._keps = self.graph._sym(self.keps_weight)
        return self._keps


def deform(g, field, eps, proxy_depth=None):
    """Deformed graph for the density rho = exp(-eps * b) against ds_k.

    The edge weight is the quasihyperbolic weight times the mean density
    of its endpoints.  The deformed boundary distance runs to proxy vertices
    within ``proxy_depth`` of the boundary and adds the tail rho(w) / eps,
    the deformed length of a descent along which b grows at unit rate.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    rho = np.exp(-eps * np.asarray(field.values, float))
    if rho.shape != (g.n_vertices,):
        raise ValueError("field is not defined on every vertex of the graph")
    e = g.edges
    w = g.qh_weight * 0.5 * (rho[e[:, 0]] + rho[e[:, 1]])
    dgraph = dataclasses.replace(g, deformed_weight=w)
    dgraph.__dict__.pop("_matrices", None)

    proxy_depth = NEAR_BOUNDARY_CELLS * g.h if proxy_depth is None else proxy_depth
    proxies = np.nonzero(g.depth <= proxy_depth)[0]
    tail = rho / eps
    d_eps, nearest = _boundary_distance(dgraph, proxies, tail[proxies])
    return DeformedGraph(dgraph, g, field, float(eps), rho, d_eps, tail, nearest, proxies)


def _boundary_distance(dgraph, proxies, offsets):
    """Multi-source distances with per-source starting offsets, via a super source."""
    n = dgraph.n_vertices
    if len(proxies) == 0:
        return np.full(n, np.inf), np.full(n, -1)
    m = dgraph.matrix("deformed").tocoo()
    s = n
    rows = np.concatenate([m.row, np.full(len(proxies), s), proxies])
    cols = np.concatenate([m.col, proxies, np.full(len(proxies), s)])
    vals = np.concatenate([m.data, offsets, offsets])
    aug = sparse.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    dist, pred = csgraph.dijkstra(aug, directed=False, indices=s, return_predecessors=True)
    # first vertex after the super source on each shortest path
    nearest = np.full(n, -1)
    order = np.argsort(dist[:n], kind="stable")
    for v in order:
        p = pred[v]
        if p == s:
            nearest[v] = v
        elif p >= 0:
            nearest[v] = nearest[p]
    return dist[:n], nearest


def d_eps_distance(dg, x, y):
    return shortest_path(dg.graph, x, y, "deformed").length("deformed")


def d_eps_rows(dg, sources):
    return distances_from(dg.graph, sources, "deformed")


def k_eps_distance(dg, x, y):
    """Quasihyperbolic metric of the deformed space on the graph."""
    path = shortest_path(dg.graph, x, y, "deformed", matrix=dg.keps_matrix())
    if len(path) < 2:
        return 0.0
    m = dg.keps_matrix()
    return float(np.asarray(m[path.vertices[:-1], path.vertices[1:]]).sum())


def k_eps_rows(dg, sources):
    return distances_from(dg.graph, sources, matrix=dg.keps_matrix())


def mu_eps(dg, cells):
    """Deformed measure of a vertex set: sum of (rho/d)^n h^n over its cells."""
    cells = np.asarray(cells, dtype=int)
    if cells.size == 0:
        return 0.0
    return float(dg.mu_cell[cells].sum())


def deformed_metric(dg):
    """Pairwise d_eps between two point sets, as a callable for separation ratios."""
    def metric(P, Q):
        vp = dg.graph.snap_many(P)
        vq = dg.graph.snap_many(Q)
        return d_eps_rows(dg, vp)[:, vq]
    return metric
