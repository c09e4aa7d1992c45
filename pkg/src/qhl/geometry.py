"""Euclidean domains described by analytic boundary-distance oracles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

KINDS = ("half_space", "ball", "punctured_space", "slit_plane", "polygon", "l_shape", "cusp")
BOUNDED_KINDS = ("ball", "polygon", "l_shape", "cusp")

L_SHAPE = ((0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0))


class DomainError(ValueError):
    pass


class NotInteriorError(DomainError):
    def __init__(self, p):
        super().__init__(f"not interior: {tuple(np.round(np.atleast_1d(p), 12))}")


@dataclass(frozen=True, eq=False)
class Domain:
    kind: str
    params: dict
    window: np.ndarray  # shape (2, dim): lower and upper corner
    dim: int = 2

    # ------------------------------------------------------------------
    def depth(self, points):
        """Distance from each point to the complement of the domain.

        Equals d(p) = dist(p, boundary) inside and 0 outside, so it is
        1-Lipschitz everywhere.  Accepts shape (dim,) or (N, dim).
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = _DEPTH[self.kind](self, pts)
        out = np.maximum(out, 0.0)
        return float(out[0]) if single else out

    def contains(self, points):
        d = self.depth(points)
        return d > 0 if np.ndim(d) else bool(d > 0)

    @property
    def bounded(self):
        return self.kind in BOUNDED_KINDS

    def artificial_faces(self):
        """(lower, upper) boolean masks: window faces beyond which the domain continues."""
        lo, hi = self.window
        rng = np.random.default_rng(0)
        masks = np.zeros((2, self.dim), bool)
        for side, base in enumerate((lo, hi)):
            for axis in range(self.dim):
                probe = rng.uniform(lo, hi, size=(512, self.dim))
                step = 1e-6 * (hi[axis] - lo[axis])
                probe[:, axis] = base[axis] + (step if side else -step)
                masks[side, axis] = bool(np.any(self.contains(probe)))
        return masks

    def in_window(self, points, margin=0.0):
        """Points inside the window, keeping ``margin`` (fraction of the window
        size) away from artificial faces; faces lying on the boundary need no margin."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.window
        pad = margin * (hi - lo)
        if margin:
            faces = self.artificial_faces()
            lo = lo + np.where(faces[0], pad, 0.0)
            hi = hi - np.where(faces[1], pad, 0.0)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def to_dict(self):
        params = {k: (np.asarray(v).tolist() if isinstance(v, (np.ndarray, tuple, list)) else v)
                  for k, v in self.params.items()}
        return {"kind": self.kind, "params": params,
                "window": self.window.tolist(), "dim": self.dim}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return make_domain(json.loads(text))


@dataclass(frozen=True)
class BoundaryAnchor:
    """A point of the Gromov boundary approximated by a sequence z(R).

    ``kind='infinity'``: z(R) = foot + R * direction (unbounded domains).
    ``kind='point'``: z(R) = point + direction / R, direction pointing inward.
    """

    kind: str
    point: tuple
    direction: tuple | None = None
    schedule: tuple = (1.0, 2.0, 4.0, 8.0)


# ----------------------------------------------------------------------
# construction

def _default_window(kind, params, dim):
    if kind == "half_space":
        lo = [-2.0] * (dim - 1) + [0.0]
        hi = [2.0] * (dim - 1) + [2.0]
        return [lo, hi]
    if kind == "ball":
        c = np.asarray(params["center"], float)
        r = params["r"]
        return [(c - r).tolist(), (c + r).tolist()]
    if kind in ("punctured_space", "slit_plane"):
        return [[-2.0] * dim, [2.0] * dim]
    if kind in ("polygon", "l_shape"):
        v = np.asarray(params["vertices"], float)
        return [v.min(axis=0).tolist(), v.max(axis=0).tolist()]
    if kind == "cusp":
        return [[0.0, -1.0], [1.0, 1.0]]
    raise DomainError(f"unknown kind {kind!r}")


def make_domain(spec):
    """Build a Domain from a description record (the JSON domain schema)."""
    spec = dict(spec)
    kind = spec.get("kind")
    if kind not in KINDS:
        raise DomainError(f"unknown kind {kind!r}")
    params = dict(spec.get("params") or {})
    # allow flat specs such as {"kind": "ball", "r": 1}
    for key, val in spec.items():
        if key not in ("kind", "params", "window", "dim", "n"):
            params.setdefault(key, val)
    dim = int(spec.get("dim", spec.get("n", 2)))
    if dim not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {dim}")

    if kind == "ball":
        r = float(params.get("r", 1.0))
        if not r > 0:
            raise DomainError(f"degenerate ball radius {r}")
        center = np.asarray(params.get("center", [0.0] * dim), float)
        if center.shape != (dim,):
            raise DomainError("ball center has wrong dimension")
        params = {"r": r, "center": center.tolist()}
    elif kind in ("slit_plane", "polygon", "l_shape", "cusp") and dim != 2:
        raise DomainError(f"{kind} is only defined in the plane")
    if kind == "slit_plane":
        params = {"tip": float(params.get("tip", 0.0))}
    elif kind == "l_shape":
        s = float(params.get("size", 1.0))
        if not s > 0:
            raise DomainError(f"degenerate l_shape size {s}")
        params = {"size": s, "vertices": (np.asarray(L_SHAPE) * s).tolist()}
    elif kind == "polygon":
        v = np.asarray(params.get("vertices", ()), float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise DomainError("polygon needs at least three 2-D vertices")
        if abs(_signed_area(v)) < 1e-14:
            raise DomainError("degenerate polygon (zero area)")
        params = {"vertices": v.tolist()}
    elif kind == "cusp":
        p = float(params.get("power", 2.0))
        if not p > 1:
            raise DomainError(f"cusp power must exceed 1, got {p}")
        params = {"power": p}

    window = spec.get("window")
    if window is None:
        window = _default_window(kind, params, dim)
    window = np.asarray(window, float)
    if window.shape != (2, dim) or np.any(window[1] <= window[0]):
        raise DomainError(f"bad window {window.tolist()}")
    window.setflags(write=False)
    dom = Domain(kind, params, window, dim)

    probe = np.random.default_rng(0).uniform(window[0], window[1], size=(4096, dim))
    if not np.any(dom.contains(probe)):
        raise DomainError("window does not meet the domain")
    return dom


def load_domain(path):
    with open(path) as fh:
        return make_domain(json.load(fh))


# ----------------------------------------------------------------------
# depth oracles

def _depth_half_space(dom, pts):
    return pts[:, -1].copy()


def _depth_ball(dom, pts):
    c = np.asarray(dom.params["center"])
    return dom.params["r"] - np.linalg.norm(pts - c, axis=1)


def _depth_punctured(dom, pts):
    return np.linalg.norm(pts, axis=1)


def _depth_slit(dom, pts):
    x = pts[:, 0] - dom.params["tip"]
    y = pts[:, 1]
    return np.where(x <= 0, np.abs(y), np.hypot(x, y))


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def segment_distance(pts, a, b):
    """Distances from points (N, 2) to segments a[j]-b[j]; returns (N, M)."""
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nmj,mj->nm", ap, ab) / L2, 0.0, 1.0)
    diff = ap - t[..., None] * ab[None]
    return np.sqrt(np.einsum("nmj,nmj->nm", diff, diff))


def _inside_polygon(pts, v):
    # even-odd crossing rule
    x, y = pts[:, 0:1], pts[:, 1:2]
    x0, y0 = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    cond = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    cross = cond & (x < xint)
    return np.count_nonzero(cross, axis=1) % 2 == 1


def _depth_polygon(dom, pts):
    v = np.asarray(dom.params["vertices"], float)
    inside = _inside_polygon(pts, v)
    out = np.zeros(len(pts))
    if np.any(inside):
        dist = segment_distance(pts[inside], v, np.roll(v, -1, axis=0))
        out[inside] = dist.min(axis=1)
    return out


_GOLD = (math.sqrt(5) - 1) / 2


def _curve_distance(a, b, p, grid=1025, iters=90):
    """Distance from (a, b) to the curve t -> (t, t**p), t in [0, 1]."""
    t = np.linspace(0.0, 1.0, grid)
    step = t[1]
    lo = np.empty_like(a)
    hi = np.empty_like(a)
    best = np.full(a.shape, np.inf)
    arg = np.zeros(a.shape, dtype=int)
    # coarse bracket, chunked to bound memory
    for k0 in range(0, grid, 128):
        tk = t[k0:k0 + 128]
        f = (tk[None, :] - a[:, None]) ** 2 + (tk[None, :] ** p - b[:, None]) ** 2
        j = np.argmin(f, axis=1)
        fj = f[np.arange(len(a)), j]
        better = fj < best
        best[better] = fj[better]
        arg[better] = j[better] + k0
    lo[:] = np.clip(t[arg] - step, 0.0, 1.0)
    hi[:] = np.clip(t[arg] + step, 0.0, 1.0)

    def f(s):
        return (s - a) ** 2 + (s ** p - b) ** 2

    for _ in range(iters):
        c = hi - _GOLD * (hi - lo)
        d = lo + _GOLD * (hi - lo)
        left = f(c) < f(d)
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
    s = 0.5 * (lo + hi)
    return np.sqrt(np.minimum(f(s), best))


def _depth_cusp(dom, pts):
    p = dom.params["power"]
    a, b = pts[:, 0], np.abs(pts[:, 1])
    inside = (a > 0) & (a < 1) & (b < np.power(np.clip(a, 0, None), p))
    out = np.zeros(len(pts))
    if np.any(inside):
        ai, bi = a[inside], b[inside]
        d_curve = _curve_distance(ai, bi, p)
        out[inside] = np.minimum(d_curve, 1.0 - ai)
    return out


_DEPTH = {
    "half_space": _depth_half_space,
    "ball": _depth_ball,
    "punctured_space": _depth_punctured,
    "slit_plane": _depth_slit,
    "polygon": _depth_polygon,
    "l_shape": _depth_polygon,
    "cusp": _depth_cusp,
}


def dist_boundary(dom, p):
    """d(p) = dist(p, boundary of dom); raises for points not strictly inside."""
    p = np.asarray(p, dtype=float)
    d = dom.depth(p)
    if np.ndim(d) == 0:
        if not d > 0:
            raise NotInteriorError(p)
        return d
    if not np.all(d > 0):
        raise NotInteriorError(p[np.argmin(d)])
    return d


# ----------------------------------------------------------------------
# sampling

def sample_interior(dom, count, seed, min_depth=0.0, box=None, stratified=False,
                    max_batches=200):
    """Seeded rejection sampling of interior points.

    ``box`` restricts candidates to a sub-box of the window.  With
    ``stratified=True`` points are spread evenly over decades of depth,
    which reaches deep into cusps and corners.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = dom.window
    if box is not None:
        box = np.asarray(box, float)
        lo, hi = np.maximum(lo, box[0]), np.minimum(hi, box[1])
        if np.any(hi <= lo):
            raise DomainError("sampling box misses the window")
    if stratified:
        return _sample_stratified(dom, count, rng, lo, hi, min_depth, max_batches)

    got = []
    n = 0
    batch = max(64, 4 * count)
    for _ in range(max_batches):
        cand = rng.uniform(lo, hi, size=(batch, dom.dim))
        keep = dom.depth(cand) > max(min_depth, 0.0)
        got.append(cand[keep])
        n += int(keep.sum())
        if n >= count:
            return np.concatenate(got)[:count]
    raise DomainError("window meets the domain in (almost) measure zero; sampling gave up")


def _sample_stratified(dom, count, rng, lo, hi, min_depth, max_batches):
    cands, depths = [], []
    for _ in range(max_batches):
        c = rng.uniform(lo, hi, size=(max(2000, 200 * count), dom.dim))
        d = dom.depth(c)
        keep = d > max(min_depth, 0.0)
        cands.append(c[keep])
        depths.append(d[keep])
        if sum(len(x) for x in cands) >= 50 * count:
            break
    c = np.concatenate(cands)
    d = np.concatenate(depths)
    if len(c) < count:
        raise DomainError("window meets the domain in (almost) measure zero; sampling gave up")
    order = np.argsort(d, kind="stable")
    logd = np.log10(d[order])
    edges = np.linspace(logd[0], logd[-1] + 1e-12, count + 1)
    picked = []
    used = np.zeros(len(c), bool)
    for k in range(count):
        i = np.searchsorted(logd, edges[k])
        i = min(i, len(c) - 1)
        while used[i] and i + 1 < len(c):
            i += 1
        used[i] = True
        picked.append(order[i])
    return c[np.array(picked)]


def _allocate(weights, count):
    """Largest-remainder allocation of ``count`` items proportional to weights."""
    w = np.asarray(weights, float)
    raw = count * w / w.sum()
    n = np.floor(raw).astype(int)
    rest = count - n.sum()
    order = np.argsort(-(raw - n), kind="stable")
    n[order[:rest]] += 1
    return n


def sample_boundary(dom, count, seed):
    """Seeded points on the boundary (inside the window where it is unbounded)."""
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = dom.window
    kind = dom.kind
    if kind == "half_space":
        pts = rng.uniform(lo, hi, size=(count, dom.dim))
        pts[:, -1] = 0.0
        return pts
    if kind == "ball":
        g = rng.standard_normal((count, dom.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return np.asarray(dom.params["center"]) + dom.params["r"] * g
    if kind == "punctured_space":
        return np.zeros((count, dom.dim))
    if kind == "slit_plane":
        tip = dom.params["tip"]
        if lo[0] > tip:
            raise DomainError("slit lies outside the window")
        x = rng.uniform(lo[0], tip, size=count)
        return np.column_stack([x, np.zeros(count)])
    if kind in ("polygon", "l_shape"):
        v = np.asarray(dom.params["vertices"], float)
        w = np.roll(v, -1, axis=0)
        lengths = np.linalg.norm(w - v, axis=1)
        per_edge = _allocate(lengths, count)
        out = []
        for a, b, m in zip(v, w, per_edge):
            t = rng.uniform(0, 1, size=m)
            out.append(a + t[:, None] * (b - a))
        return np.concatenate(out)
    if kind == "cusp":
        p = dom.params["power"]
        t = np.linspace(0, 1, 4001)
        seg = np.hypot(np.diff(t), np.diff(t ** p))
        arc = np.concatenate([[0], np.cumsum(seg)])
        total_curve = arc[-1]
        per = _allocate([total_curve, total_curve, 2.0], count)
        s = rng.uniform(0, total_curve, size=per[0] + per[1])
        tt = np.interp(s, arc, t)
        sign = np.concatenate([np.ones(per[0]), -np.ones(per[1])])
        curve = np.column_stack([tt, sign * tt ** p])
        side = np.column_stack([np.ones(per[2]), rng.uniform(-1, 1, per[2])])
        return np.concatenate([curve, side])
    raise DomainError(f"unknown kind {kind!r}")


# ----------------------------------------------------------------------
# boundary anchors

def inward_normal(dom, q):
    q = np.asarray(q, float)
    if dom.kind == "half_space":
        n = np.zeros(dom.dim)
        n[-1] = 1.0
        return n
    if dom.kind == "ball":
        c = np.asarray(dom.params["center"])
        return -(q - c) / np.linalg.norm(q - c)
    # numerical gradient of the depth just inside q
    best, best_d = None, -1.0
    for ang in np.linspace(0, 2 * np.pi, 72, endpoint=False):
        u = np.array([np.cos(ang), np.sin(ang)])
        dd = dom.depth(q + 1e-4 * u)
        if dd > best_d:
            best, best_d = u, dd
    if best_d <= 0:
        raise DomainError("cannot find an inward direction at the anchor point")
    return best


def anchor_points(dom, anchor, R, o=None):
    """The approximating point z(R) of a boundary anchor."""
    if R <= 0:
        raise DomainError("anchor radius must be positive")
    point = np.asarray(anchor.point, float)
    if anchor.kind == "infinity":
        if dom.bounded:
            raise DomainError("infinity anchor requested on a bounded domain")
        u = np.asarray(anchor.direction, float)
        u = u / np.linalg.norm(u)
        return point + R * u
    if anchor.kind == "point":
        u = anchor.direction
        u = inward_normal(dom, point) if u is None else np.asarray(u, float) / np.linalg.norm(u)
        return point + u / R
    raise DomainError(f"unknown anchor kind {anchor.kind!r}")


def vertical_infinity(dim=2, foot=None, schedule=(1.0, 2.0, 4.0, 8.0)):
    """The point at infinity of a half-space, approached vertically."""
    foot = tuple([0.0] * dim) if foot is None else tuple(foot)
    up = tuple([0.0] * (dim - 1) + [1.0])
    return BoundaryAnchor("infinity", foot, up, tuple(schedule))
