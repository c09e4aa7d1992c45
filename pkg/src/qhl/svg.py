"""Deterministic SVG figures of 2-D domains with witness overlays."""

from __future__ import annotations

import numpy as np

from .geometry import DomainError

SIZE = 600.0
PALETTE = ("#c0392b", "#2471a3", "#229954", "#8e44ad", "#d68910", "#17202a")
MARKER_KEYS = ("points", "markers", "x", "witness", "sigma")


def _fmt(v):
    return f"{v:.2f}"


class _Frame:
    def __init__(self, window):
        lo, hi = (np.asarray(w, float) for w in window)
        self.lo, self.hi = lo, hi
        span = hi - lo
        self.scale = SIZE / span.max()
        self.w, self.h = span * self.scale

    def xy(self, p):
        p = np.atleast_2d(np.asarray(p, float))
        x = (p[:, 0] - self.lo[0]) * self.scale
        y = (self.hi[1] - p[:, 1]) * self.scale
        return np.column_stack([x, y])

    def points_attr(self, p):
        return " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in self.xy(p))


def boundary_polylines(dom):
    """Boundary pieces of a 2-D domain, clipped to its window, as point arrays."""
    lo, hi = dom.window
    k, prm = dom.kind, dom.params
    if k == "half_space":
        return [np.array([[lo[0], 0.0], [hi[0], 0.0]])]
    if k == "ball":
        t = np.linspace(0, 2 * np.pi, 361)
        c = np.asarray(prm.get("center", (0.0, 0.0)), float)
        return [c + prm["r"] * np.column_stack([np.cos(t), np.sin(t)])]
    if k == "punctured_space":
        return [np.zeros((1, 2))]
    if k == "slit_plane":
        return [np.array([[lo[0], 0.0], [prm["tip"], 0.0]])]
    if k in ("polygon", "l_shape"):
        v = np.asarray(prm["vertices"], float)
        return [np.vstack([v, v[:1]])]
    if k == "cusp":
        p = prm["power"]
        t = np.linspace(0, 1, 201)
        top = np.column_stack([t, t ** p])
        bot = np.column_stack([t[::-1], -t[::-1] ** p])
        return [np.vstack([bot, top]), np.array([[1.0, -1.0], [1.0, 1.0]])]
    raise DomainError(f"unknown kind {k!r}")


def emit_svg(domain, overlays=None):
    """SVG text: window frame, boundary outline, then overlays in sorted key order.

    Overlay values are point arrays of shape (k, 2).  Keys in MARKER_KEYS and
    single points are drawn as markers; everything else as a polyline with
    endpoint markers.
    """
    if domain.dim != 2:
        raise DomainError("svg is 2-D only")
    fr = _Frame(domain.window)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(fr.w)}" height="{_fmt(fr.h)}" '
           f'viewBox="0 0 {_fmt(fr.w)} {_fmt(fr.h)}">',
           f'<rect x="0" y="0" width="{_fmt(fr.w)}" height="{_fmt(fr.h)}" fill="white" '
           'stroke="#999999" stroke-dasharray="4 3"/>',
           '<g id="boundary">']
    for piece in boundary_polylines(domain):
        if len(piece) == 1:
            (x, y), = fr.xy(piece)
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="black"/>')
        else:
            out.append(f'<polyline points="{fr.points_attr(piece)}" fill="none" stroke="black" '
                       'stroke-width="2"/>')
    out.append("</g>")
    for i, name in enumerate(sorted(overlays or {})):
        pts = np.atleast_2d(np.asarray(overlays[name], float))
        if pts.size == 0:
            continue
        if pts.shape[1] != 2:
            raise DomainError("svg is 2-D only")
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<g id="{name}">')
        if name in MARKER_KEYS or len(pts) == 1:
            marks = pts
        else:
            out.append(f'<polyline points="{fr.points_attr(pts)}" fill="none" stroke="{color}" '
                       'stroke-width="1.5"/>')
            marks = pts[[0, -1]]
        for x, y in fr.xy(marks):
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
