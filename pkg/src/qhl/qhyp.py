"""Quasihyperbolic distances, geodesics and closed-form reference values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, Path, distances_from, shortest_path

NEAR_BOUNDARY_CELLS = 3.0


class NearBoundaryError(GraphError):
    pass


@dataclass(eq=False)
class QhGeodesic:
    path: Path
    x: np.ndarray
    y: np.ndarray
    value: float
    h: float

    @property
    def coords(self):
        return self.path.coords

    @property
    def vertices(self):
        return self.path.vertices

    def is_locally_minimal(self, tol=1e-9):
        """Every vertex splits the geodesic into two graph-minimal halves."""
        g = self.path.graph
        ends = distances_from(g, [self.vertices[0], self.vertices[-1]])
        through = ends[0, self.vertices] + ends[1, self.vertices]
        return bool(np.all(np.abs(through - self.value) <= tol * max(1.0, self.value)))


def check_depth(g, p):
    """Refuse query points closer than three cells to the boundary."""
    if isinstance(p, (int, np.integer)):
        d = g.depth[p]
        p = g.coords[p]
    else:
        d = g.domain.depth(np.asarray(p, float))
    if d < NEAR_BOUNDARY_CELLS * g.h:
        raise NearBoundaryError(f"point {np.round(p, 6).tolist()} has d={d:.3g} < {NEAR_BOUNDARY_CELLS:g}h")


def qh_geodesic(g, x, y):
    check_depth(g, x)
    check_depth(g, y)
    path = shortest_path(g, x, y, "quasihyperbolic")
    return QhGeodesic(path, np.asarray(g.coords[path.vertices[0]]), np.asarray(g.coords[path.vertices[-1]]),
                      path.length("quasihyperbolic"), g.h)


def qh_distance(g, x, y):
    return qh_geodesic(g, x, y).value


def closed_form_qh(kind, x, y):
    """Exact quasihyperbolic distance where a formula is known.

    half_space: the hyperbolic distance arccosh(1 + |x-y|^2 / (2 x_n y_n)).
    punctured_plane: sqrt(theta^2 + log^2(|x|/|y|)), theta the angle in [0, pi].
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if kind in ("half_space", "half_plane"):
        if x[-1] <= 0 or y[-1] <= 0:
            raise ValueError("points must lie in the upper half-space")
        return math.acosh(1.0 + float(np.sum((x - y) ** 2)) / (2.0 * x[-1] * y[-1]))
    if kind in ("punctured_plane", "punctured_space"):
        if len(x) != 2:
            raise ValueError("the punctured-space formula is planar")
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        if nx == 0 or ny == 0:
            raise ValueError("points must differ from the puncture")
        cos = np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0)
        theta = math.acos(cos)
        return math.hypot(theta, math.log(nx / ny))
    raise ValueError(f"no closed form known for kind {kind!r}")


def hyperbolic_semicircle(x, y, samples=2001):
    """Points on the half-plane hyperbolic geodesic between x and y."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if abs(x[0] - y[0]) < 1e-14:
        t = np.linspace(0, 1, samples)
        return np.column_stack([np.full(samples, x[0]), x[1] + t * (y[1] - x[1])])
    c = (np.dot(y, y) - np.dot(x, x)) / (2 * (y[0] - x[0]))
    r = math.hypot(x[0] - c, x[1])
    a0 = math.atan2(x[1], x[0] - c)
    a1 = math.atan2(y[1], y[0] - c)
    a = np.linspace(a0, a1, samples)
    return np.column_stack([c + r * np.cos(a), r * np.sin(a)])
