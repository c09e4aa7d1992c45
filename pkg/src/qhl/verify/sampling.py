"""Seeded point pairs on a coarse lattice.

Points are drawn from the lattice window.lo + spacing * Z^n, so they are
exact graph vertices for every h that divides the spacing; refinement
comparisons then see identical endpoints at h and h/2.
"""

from __future__ import annotations

import numpy as np

from ..geometry import DomainError


def lattice_candidates(dom, spacing=0.1, min_depth=0.0, margin=0.2, box=None):
    lo, hi = dom.window
    if box is not None:
        box = np.asarray(box, float)
        blo = lo + spacing * np.ceil((np.maximum(lo, box[0]) - lo) / spacing - 1e-9)
        bhi = np.minimum(hi, box[1])
    else:
        blo, bhi = lo, hi
    axes = [np.arange(blo[i], bhi[i] + 1e-9 * spacing, spacing) for i in range(dom.dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.dim)
    ok = dom.depth(grid) >= max(min_depth, 1e-12)
    ok &= dom.in_window(grid, margin)
    return grid[ok]


def sample_pairs(dom, count, seed, spacing=0.1, min_depth=0.15, margin=0.2, box=None,
                 min_sep=None, max_sep=None, max_tries=200):
    """``count`` seeded pairs of distinct lattice points, shape (count, 2, dim)."""
    cand = lattice_candidates(dom, spacing, min_depth, margin, box)
    if len(cand) < 2:
        raise DomainError("fewer than two admissible lattice points")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(max_tries):
        i = rng.integers(0, len(cand), size=(4 * count, 2))
        a, b = cand[i[:, 0]], cand[i[:, 1]]
        sep = np.linalg.norm(a - b, axis=1)
        ok = sep > 0.5 * spacing
        if min_sep is not None:
            ok &= sep >= min_sep
        if max_sep is not None:
            ok &= sep <= max_sep
        out.extend(np.stack([a[ok], b[ok]], axis=1))
        if len(out) >= count:
            return np.asarray(out[:count])
    raise DomainError(f"could not draw {count} pairs with the requested separation")


def sample_points(dom, count, seed, spacing=0.1, min_depth=0.15, margin=0.2, box=None):
    cand = lattice_candidates(dom, spacing, min_depth, margin, box)
    if len(cand) < count:
        raise DomainError(f"only {len(cand)} admissible lattice points for {count} samples")
    rng = np.random.default_rng(seed)
    return cand[np.sort(rng.choice(len(cand), count, replace=False))]


def near_pairs(dom, count, seed, ratio=(0.05, 0.8), min_depth=0.06, margin=0.2, box=None):
    """Pairs (x, y) with |x - y| a random fraction of d(x), for local comparisons."""
    rng = np.random.default_rng(seed)
    lo, hi = dom.window if box is None else np.asarray(box, float)
    out = []
    for _ in range(200):
        x = rng.uniform(lo, hi, size=(4 * count, dom.dim))
        dx = dom.depth(x)
        ang = rng.standard_normal((len(x), dom.dim))
        ang /= np.linalg.norm(ang, axis=1, keepdims=True)
        t = rng.uniform(*ratio, size=len(x))
        y = x + (t * dx)[:, None] * ang
        ok = (dx >= min_depth) & (dom.depth(y) >= min_depth)
        ok &= dom.in_window(x, margin) & dom.in_window(y, margin)
        out.extend(np.stack([x[ok], y[ok]], axis=1))
        if len(out) >= count:
            return np.asarray(out[:count])
    raise DomainError("could not draw enough near pairs")
