"""Verifiers built on quasihyperbolic geodesics and Euclidean competitor curves."""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csgraph
from scipy.spatial.distance import pdist

from ..geometry import anchor_points, make_domain
from ..graph import GraphError, build_graph, shortest_path
from ..qhyp import NEAR_BOUNDARY_CELLS
from .report import VerificationReport, witness

MIN_PAIRS = 30


def _vertex_pairs(g, pairs):
    """Snap pairs to vertices, dropping near-boundary and coincident ones."""
    pairs = np.asarray(pairs, float)
    out, skipped = [], 0
    for x, y in pairs:
        vx, _ = g.snap(x)
        vy, _ = g.snap(y)
        near = min(g.depth[vx], g.depth[vy]) < NEAR_BOUNDARY_CELLS * g.h
        if near or vx == vy or g.components[vx] != g.components[vy]:
            skipped += 1
            continue
        out.append((vx, vy))
    return out, skipped


def _check_count(pairs, minimum):
    if len(pairs) < minimum:
        raise ValueError(f"need at least {minimum} pairs, got {len(pairs)}")


def _snap_floor(g, verts):
    verts = np.asarray(verts, dtype=int)
    if verts.size == 0:
        return 0.0
    return float(2.0 * g.h / g.depth[verts].min())


def _geodesic(g, vx, vy):
    return shortest_path(g, int(vx), int(vy), "quasihyperbolic")


def _report(name, g, constants, wit, n_used, skipped, verts, extra_tol=None):
    tol = {"snap_slack": _snap_floor(g, verts)}
    if extra_tol:
        tol.update(extra_tol)
    rep = VerificationReport(name, constants, wit, {"pairs": n_used, "skipped": skipped},
                             float(g.h), True, tol)
    if not all(np.isfinite(v) for v in constants.values() if isinstance(v, float)):
        rep.fail("non-finite constant")
    return rep


def verify_gehring_hayman(g, pairs, min_pairs=MIN_PAIRS):
    """C_gh = sup of Euclidean geodesic length over the inner distance."""
    _check_count(pairs, min_pairs)
    vp, skipped = _vertex_pairs(g, pairs)
    best, wit = 0.0, None
    for vx, vy in vp:
        geo = _geodesic(g, vx, vy)
        inner = shortest_path(g, vx, vy, "euclidean").length("euclidean")
        r = geo.length("euclidean") / inner
        if wit is None or r > best:
            best, wit = r, (vx, vy, geo.length("euclidean"), inner)
    if wit is None:
        raise GraphError("no admissible pair")
    vx, vy, lg, li = wit
    rep = _report("gehring_hayman", g, {"C_gh": best},
                  witness(g.coords[[vx, vy]], ratio=best, geodesic_length=lg, inner_distance=li),
                  len(vp), skipped, [v for p in vp for v in p])
    return rep


def verify_separation(g, pairs, competitors_per_pair=4, seed=0):
    """C_sp = sup over geodesic points z and competitors of l_G(z, gamma) / d(z).

    Competitors are the inner-shortest path and seeded detours through a
    random waypoint near the pair.
    """
    vp, skipped = _vertex_pairs(g, pairs)
    rng = np.random.default_rng(seed)
    emat = g.matrix("euclidean")
    deep = np.nonzero(g.depth >= NEAR_BOUNDARY_CELLS * g.h)[0]
    best, wit, n_comp = 0.0, None, 0
    for vx, vy in vp:
        geo = _geodesic(g, vx, vy)
        comps = [shortest_path(g, vx, vy, "euclidean").vertices]
        mid = 0.5 * (g.coords[vx] + g.coords[vy])
        rad = np.linalg.norm(g.coords[vx] - g.coords[vy])
        near = deep[(np.linalg.norm(g.coords[deep] - mid, axis=1) <= rad)
                    & (g.components[deep] == g.components[vx])]
        for _ in range(competitors_per_pair):
            if near.size == 0:
                break
            w = int(near[rng.integers(0, near.size)])
            a = shortest_path(g, vx, w, "euclidean").vertices
            b = shortest_path(g, w, vy, "euclidean").vertices
            comps.append(np.concatenate([a, b[1:]]))
        for c in comps:
            n_comp += 1
            dist = csgraph.dijkstra(emat, directed=False, indices=c, min_only=True)
            r = dist[geo.vertices] / g.depth[geo.vertices]
            j = int(np.argmax(r))
            if wit is None or r[j] > best:
                best = float(r[j])
                z = geo.vertices[j]
                wit = (vx, vy, z, float(dist[z]))
    if wit is None:
        raise GraphError("no admissible pair")
    vx, vy, z, dz = wit
    rep = _report("separation", g, {"C_sp": best},
                  witness(g.coords[[vx, vy, z]], ratio=best, inner_distance_to_competitor=dz,
                          d_z=float(g.depth[z])),
                  len(vp), skipped, [v for p in vp for v in p])
    rep.samples["competitors"] = n_comp
    return rep


def verify_pommerenke(g, pairs, min_pairs=MIN_PAIRS):
    """R = sup diam(geodesic) / |x - y|.

    Every competitor curve has diameter at least |x - y|, so R bounds the
    Pommerenke ratio diam(geodesic) / diam(curve) from above; the ratio
    against the inner-shortest path is reported alongside.
    """
    _check_count(pairs, min_pairs)
    vp, skipped = _vertex_pairs(g, pairs)
    best, wit, observed = 0.0, None, 0.0
    for vx, vy in vp:
        geo = _geodesic(g, vx, vy)
        chord = float(np.linalg.norm(g.coords[vx] - g.coords[vy]))
        r = geo.diameter / chord
        comp = shortest_path(g, vx, vy, "euclidean")
        observed = max(observed, geo.diameter / comp.diameter)
        if wit is None or r > best:
            best, wit = r, (vx, vy, geo.diameter, chord)
    if wit is None:
        raise GraphError("no admissible pair")
    vx, vy, diam, chord = wit
    return _report("pommerenke", g, {"R": best, "C_po_observed": observed},
                   witness(g.coords[[vx, vy]], ratio=best, geodesic_diameter=diam, chord=chord),
                   len(vp), skipped, [v for p in vp for v in p])


def verify_uniformity(g, pairs, min_pairs=MIN_PAIRS):
    """A = max(sup l(geod)/|x-y|, sup_z min(l(x..z), l(z..y)) / d(z))."""
    _check_count(pairs, min_pairs)
    vp, skipped = _vertex_pairs(g, pairs)
    qc, cone, wq, wc = 0.0, 0.0, None, None
    for vx, vy in vp:
        geo = _geodesic(g, vx, vy)
        cum = geo.cumulative("euclidean")
        total = cum[-1]
        r = total / np.linalg.norm(g.coords[vx] - g.coords[vy])
        if wq is None or r > qc:
            qc, wq = r, (vx, vy)
        c = np.minimum(cum, total - cum) / g.depth[geo.vertices]
        j = int(np.argmax(c))
        if wc is None or c[j] > cone:
            cone, wc = float(c[j]), (vx, vy, geo.vertices[j])
    if wq is None:
        raise GraphError("no admissible pair")
    A = max(qc, cone)
    pts = g.coords[list(wq)] if qc >= cone else g.coords[list(wc)]
    rep = _report("uniformity", g, {"A": A, "quasiconvexity": qc, "double_cone": cone},
                  witness(pts, A=A), len(vp), skipped, [v for p in vp for v in p])
    return rep


def _scale_pairs(dom, scales, rng, count):
    """One normalized pair configuration, placed at every scale of the sweep.

    For a cusp the pairs run along the axis between x1 = s and x1 = 2s; for
    other domains they sit in the annulus s <= |p - focus| <= 2s around a
    boundary point, at depth >= 0.3 s for every scale.
    """
    if dom.kind == "cusp":
        p = dom.params["power"]
        a = rng.uniform(1.0, 1.1, count)
        b = rng.uniform(1.9, 2.0, count)
        oa, ob = rng.uniform(-0.2, 0.2, (2, count))
        out = []
        for s in scales:
            A = np.column_stack([s * a, oa * (s * a) ** p])
            B = np.column_stack([s * b, ob * (s * b) ** p])
            out.append(np.stack([A, B], axis=1))
        return out
    focus = _focus(dom)
    got = []
    for _ in range(200):
        u = rng.standard_normal((64, dom.dim))
        u *= (rng.uniform(1, 2, 64) / np.linalg.norm(u, axis=1))[:, None]
        ok = np.ones(len(u), bool)
        for s in scales:
            pts = focus + s * u
            ok &= (dom.depth(pts) >= 0.3 * s) & dom.in_window(pts)
        got.extend(u[ok])
        if len(got) >= 2 * count:
            u = np.asarray(got[: 2 * count]).reshape(count, 2, dom.dim)
            return [focus + s * u for s in scales]
    raise GraphError("too few admissible points near the sweep focus")


def _scale_window(dom, s, cells):
    if dom.kind == "cusp":
        p = dom.params["power"]
        lo = np.array([0.9 * s, -(2.1 * s) ** p])
        hi = np.array([2.1 * s, (2.1 * s) ** p])
        return lo, hi, s ** p / cells
    focus = _focus(dom)
    lo = np.maximum(focus - 2.5 * s, dom.window[0])
    hi = np.minimum(focus + 2.5 * s, dom.window[1])
    return lo, hi, s / cells


def _focus(dom):
    if dom.kind == "half_space":
        return np.zeros(dom.dim)
    if dom.kind == "ball":
        c = np.asarray(dom.params["center"], float)
        e = np.zeros(dom.dim)
        e[0] = dom.params["r"]
        return c + e
    if dom.kind in ("punctured_space",):
        return np.zeros(dom.dim)
    if dom.kind == "slit_plane":
        return np.array([dom.params["tip"], 0.0])
    if dom.kind in ("polygon", "l_shape"):
        return np.asarray(dom.params["vertices"][0], float)
    return np.zeros(dom.dim)


def uniformity_scale_sweep(dom, scales=None, pairs_per_scale=12, seed=0, cells=None, tol=0.15):
    """Fit A at geometric scales approaching a boundary feature (the tip of a
    cusp, or a boundary point otherwise) with h proportional to the local size.

    Uniform domains are scale invariant, so A stays put; a report whose
    constant grows by more than ``tol`` fails as unconverged/blow-up.
    """
    if scales is None:
        base = 0.25 if dom.kind == "cusp" else 0.1 * float(np.min(dom.window[1] - dom.window[0]))
        scales = (base, base / 2, base / 4)
    scales = sorted((float(s) for s in scales), reverse=True)
    if cells is None:
        cells = 8 if dom.kind == "cusp" else 20
    rng = np.random.default_rng(seed)
    per = []
    for s, pairs in zip(scales, _scale_pairs(dom, scales, rng, pairs_per_scale)):
        lo, hi, h = _scale_window(dom, s, cells)
        sub = make_domain({"kind": dom.kind, "params": dom.params, "window": [lo, hi], "dim": dom.dim})
        g = build_graph(sub, h)
        rep = verify_uniformity(g, pairs, min_pairs=min(pairs_per_scale, MIN_PAIRS))
        per.append({"scale": s, "h": h, "A": rep.constants["A"], "pairs": rep.samples["pairs"],
                    "witness": rep.witness})
    A = [p["A"] for p in per]
    growth = A[-1] / A[0]
    rep = VerificationReport("uniformity_scale_sweep",
                             {"A_max": max(A), "growth": growth, "A_by_scale": A},
                             per[int(np.argmax(A))]["witness"],
                             {"scales": len(scales), "pairs_per_scale": pairs_per_scale},
                             per[-1]["h"], True, {"stability": tol},
                             details={"scales": scales, "runs": per})
    if not np.all(np.isfinite(A)):
        rep.fail("non-finite constant")
    if abs(growth - 1.0) > tol:
        rep.fail("unconverged/blow-up")
    return rep


def verify_qh_sandwich(g, pairs, slack=1.05):
    """Where k <= 1: |x-y|/(2 d(x)) <= k <= 2 |x-y| / d(x), up to ``slack``."""
    vp, skipped = _vertex_pairs(g, pairs)
    lo_worst, hi_worst, used, wit = math.inf, 0.0, 0, None
    viol = 0
    for vx, vy in vp:
        k = _geodesic(g, vx, vy).length("quasihyperbolic")
        if k > 1:
            continue
        used += 1
        t = np.linalg.norm(g.coords[vx] - g.coords[vy]) / g.depth[vx]
        low = k / (0.5 * t)       # must be >= 1/slack
        high = k / (2.0 * t)      # must be <= slack
        if low < 1 / slack or high > slack:
            viol += 1
        if low < lo_worst:
            lo_worst, wit = low, (vx, vy, k, t)
        hi_worst = max(hi_worst, high)
    if wit is None:
        raise GraphError("no pair with k <= 1")
    vx, vy, k, t = wit
    rep = _report("qh_sandwich", g, {"min_lower_ratio": lo_worst, "max_upper_ratio": hi_worst},
                  witness(g.coords[[vx, vy]], k=k, t=t), used, skipped + len(vp) - used,
                  [v for p in vp for v in p], {"slack": slack})
    rep.samples["violations"] = viol
    if viol:
        rep.fail("sandwich violated")
    return rep


def verify_bhk_uniform_bounds(g, pairs, A=None, slack=0.02):
    """log(1 + |x-y|/min d) <= k everywhere; k <= 4 A^2 log(1 + ...) given A."""
    vp, skipped = _vertex_pairs(g, pairs)
    low_ratio, high_ratio, wit = math.inf, 0.0, None
    for vx, vy in vp:
        k = _geodesic(g, vx, vy).length("quasihyperbolic")
        j = math.log1p(np.linalg.norm(g.coords[vx] - g.coords[vy]) / min(g.depth[vx], g.depth[vy]))
        r = k / j
        if r < low_ratio:
            low_ratio, wit = r, (vx, vy, k, j)
        high_ratio = max(high_ratio, r)
    if wit is None:
        raise GraphError("no admissible pair")
    vx, vy, k, j = wit
    consts = {"min_k_over_j": low_ratio, "max_k_over_j": high_ratio}
    tol = {"discretization_slack": slack}
    if A is not None:
        consts["upper_factor"] = 4.0 * A * A
    rep = _report("bhk_uniform_bounds", g, consts, witness(g.coords[[vx, vy]], k=k, j=j),
                  len(vp), skipped, [v for p in vp for v in p], tol)
    if low_ratio < 1.0 - slack:
        rep.fail("lower bound violated")
    if A is not None and high_ratio > 4.0 * A * A:
        rep.fail("upper bound violated")
    return rep


def sample_bhk_triples(dom, count, seed, spacing=0.1, min_depth=0.15, margin=0.2, box=None):
    """Triples (x, y, z) of lattice points with |x - y| >= 2 |x - z| > 0."""
    from .sampling import lattice_candidates
    cand = lattice_candidates(dom, spacing, min_depth, margin, box)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(400):
        i = rng.integers(0, len(cand), size=(8 * count, 3))
        x, y, z = cand[i[:, 0]], cand[i[:, 1]], cand[i[:, 2]]
        dxy = np.linalg.norm(x - y, axis=1)
        dxz = np.linalg.norm(x - z, axis=1)
        ok = (dxz > 0.5 * spacing) & (dxy >= 2 * dxz)
        out.extend(np.stack([x[ok], y[ok], z[ok]], axis=1))
        if len(out) >= count:
            return np.asarray(out[:count])
    raise GraphError("no admissible triple found")


def verify_bhk314(g, triples, seed=0):
    """C_A = sup |k(y, w) - dist_k(y, alpha)| with w on [x, y]_k at arclength
    |x - z| and alpha = [x, z]_k."""
    if isinstance(triples, (int, np.integer)):
        triples = sample_bhk_triples(g.domain, int(triples), seed)
    triples = np.asarray(triples, float)
    best, wit, used = 0.0, None, 0
    qmat = g.matrix("quasihyperbolic")
    for x, y, z in triples:
        vx, vy, vz = g.snap(x)[0], g.snap(y)[0], g.snap(z)[0]
        if len({vx, vy, vz}) < 3 or min(g.depth[[vx, vy, vz]]) < NEAR_BOUNDARY_CELLS * g.h:
            continue
        X, Y, Z = g.coords[[vx, vy, vz]]
        if np.linalg.norm(X - Y) < 2 * np.linalg.norm(X - Z):
            continue
        used += 1
        gam = _geodesic(g, vx, vy)
        cum = gam.cumulative("euclidean")
        j = int(np.argmin(np.abs(cum - np.linalg.norm(X - Z))))
        w = gam.vertices[j]
        alpha = _geodesic(g, vx, vz)
        ky = csgraph.dijkstra(qmat, directed=False, indices=vy)
        dist_alpha = float(ky[alpha.vertices].min())
        defect = abs(float(ky[w]) - dist_alpha)
        if wit is None or defect > best:
            best, wit = defect, (vx, vy, vz, w, float(ky[w]), dist_alpha)
    if wit is None:
        raise GraphError("no admissible triple found")
    vx, vy, vz, w, kyw, da = wit
    rep = VerificationReport("bhk314", {"C_A": best},
                             witness(g.coords[[vx, vy, vz, w]], k_yw=kyw, dist_y_alpha=da, defect=best),
                             {"triples": used, "skipped": len(triples) - used}, float(g.h), True,
                             {"snap_slack": 2.0 * g.h / g.depth[[vx, vy, vz]].min()})
    if not np.isfinite(best):
        rep.fail("non-finite constant")
    return rep


# ----------------------------------------------------------------------
# cross-sections

def cross_section_sides(g, sigma):
    """Component labels of the graph with sigma removed; exactly two required."""
    sigma = np.unique(np.asarray(sigma, dtype=int))
    if sigma.size == 0:
        raise GraphError("not a cross-section: empty set")
    keep = np.ones(g.n_vertices, bool)
    keep[sigma] = False
    rest = np.nonzero(keep)[0]
    sub = g.matrix("euclidean")[rest][:, rest]
    n, lab = csgraph.connected_components(sub, directed=False)
    if n != 2:
        raise GraphError(f"not a cross-section: removal leaves {n} components")
    labels = np.full(g.n_vertices, -1)
    labels[rest] = lab
    return labels


def chord_cross_section(g, c, axis=0):
    """Vertices with |x_axis - c| <= h: a band wide enough to block every stencil move."""
    return np.nonzero(np.abs(g.coords[:, axis] - c) <= g.h + 1e-12)[0]


def verify_faltensatz(g, sigma, trials=40, seed=0, constants=None, slack=1.5):
    """A = sup l(x -> sigma) / min(d(x), diam sigma) over points x of geodesics
    with both end points on the other side of sigma.

    ``constants`` (C_gh, C_sp, R) enables the composed check A <= slack * product.
    """
    labels = cross_section_sides(g, sigma)
    sigma = np.unique(np.asarray(sigma, dtype=int))
    diam = float(pdist(g.coords[sigma]).max()) if sigma.size > 1 else 0.0
    emat = g.matrix("euclidean")
    to_sigma, pred, src = csgraph.dijkstra(emat, directed=False, indices=sigma, min_only=True,
                                           return_predecessors=True)
    deep = g.depth >= NEAR_BOUNDARY_CELLS * g.h
    rng = np.random.default_rng(seed)
    best, wit, used, strays = 0.0, None, 0, 0
    for t in range(trials):
        side = t % 2
        cand = np.nonzero((labels == side) & deep & (to_sigma <= diam))[0]
        if cand.size < 2:
            continue
        a, b = rng.choice(cand, 2, replace=False)
        geo = _geodesic(g, a, b)
        used += 1
        other = geo.vertices[labels[geo.vertices] == 1 - side]
        if other.size == 0:
            continue
        strays += 1
        r = to_sigma[other] / np.minimum(g.depth[other], diam)
        j = int(np.argmax(r))
        if wit is None or r[j] > best:
            best, wit = float(r[j]), (a, b, int(other[j]), geo)
    consts = {"A": best, "diam_sigma": diam}
    if wit is None:
        rep = VerificationReport("faltensatz", consts, witness(np.zeros((0, g.dim))),
                                 {"geodesics": used, "straying": 0}, float(g.h), True, {})
        rep.notes.append("no geodesic crossed the cross-section")
    else:
        a, b, x, geo = wit
        # escape arc from x back to sigma
        arc = [x]
        while pred[arc[-1]] >= 0:
            arc.append(int(pred[arc[-1]]))
        rep = VerificationReport("faltensatz", consts,
                                 witness(g.coords[[a, b, x, arc[-1]]], ratio=best,
                                         escape_length=float(to_sigma[x]), d_x=float(g.depth[x])),
                                 {"geodesics": used, "straying": strays}, float(g.h), True,
                                 {"snap_slack": _snap_floor(g, [a, b])})
        rep.overlays = {"sigma": g.coords[sigma], "L": geo.coords, "alpha": g.coords[arc],
                        "x": g.coords[x]}
    if not np.isfinite(best):
        rep.fail("non-finite constant")
    if constants is not None:
        prod = constants["C_gh"] * constants["C_sp"] * constants["R"]
        rep.constants["composed_bound"] = slack * prod
        rep.tolerances["composition_slack"] = slack
        if best > slack * prod:
            rep.fail("composed bound violated")
    return rep


# ----------------------------------------------------------------------
# linear local connectivity

DYADIC = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def _connected_within(g, a, b, mask):
    if not (mask[a] and mask[b]):
        return False, None
    idx = np.nonzero(mask)[0]
    loc = np.full(g.n_vertices, -1)
    loc[idx] = np.arange(idx.size)
    sub = g.matrix("euclidean")[idx][:, idx]
    dist, pred = csgraph.dijkstra(sub, directed=False, indices=loc[a], return_predecessors=True,
                                  unweighted=True)
    if not np.isfinite(dist[loc[b]]):
        return False, None
    path = [loc[b]]
    while path[-1] != loc[a]:
        path.append(pred[path[-1]])
    return True, idx[np.array(path[::-1])]


def verify_llc(dom, g, trials=30, seed=0, margin=0.2):
    """Smallest dyadic C for sampled LLC instances, by graph search in the
    enlarged ball (LLC1) or outside the shrunk ball (LLC2)."""
    if trials < 30:
        raise ValueError("need at least 30 trials")
    rng = np.random.default_rng(seed)
    deep = np.nonzero((g.depth >= NEAR_BOUNDARY_CELLS * g.h) & dom.in_window(g.coords, margin))[0]
    lo, hi = dom.window
    size = float(np.min(hi - lo))
    c1, c2, worst1, worst2, bt = 1.0, 1.0, None, None, 0.0
    unresolved = 0
    X = g.coords
    for t in range(trials):
        # LLC1: a, b in B(a, r) with r just above |a - b|
        a, b = rng.choice(deep, 2, replace=False)
        r = np.linalg.norm(X[a] - X[b]) + 2 * g.h
        for C in DYADIC:
            ok, path = _connected_within(g, a, b, np.linalg.norm(X - X[a], axis=1) < C * r)
            if ok:
                break
        else:
            unresolved += 1
            continue
        if C > c1 or worst1 is None:
            c1, worst1 = max(c1, C), (a, b, r, C)
        diam = float(pdist(X[path]).max())
        bt = max(bt, diam / np.linalg.norm(X[a] - X[b]))
        # LLC2: a, b outside the closed ball B(x, r), joined outside B(x, r / C)
        x = rng.uniform(lo, hi)
        r2 = rng.uniform(0.05, 0.3) * size
        far = deep[np.linalg.norm(X[deep] - x, axis=1) > r2]
        if far.size < 2:
            continue
        a2, b2 = rng.choice(far, 2, replace=False)
        for C in DYADIC:
            ok, _ = _connected_within(g, a2, b2, np.linalg.norm(X - x, axis=1) > r2 / C)
            if ok:
                break
        else:
            unresolved += 1
            continue
        if C > c2 or worst2 is None:
            c2, worst2 = max(c2, C), (a2, b2, x, r2, C)
    C = max(c1, c2)
    pts = [X[worst1[0]], X[worst1[1]]] if worst1 else []
    rep = VerificationReport("llc", {"C": C, "C1": c1, "C2": c2, "bounded_turning_ratio": bt},
                             witness(np.asarray(pts).reshape(-1, g.dim), C1=c1, C2=c2),
                             {"trials": trials, "unresolved": unresolved}, float(g.h), True,
                             {"graph_radius_pad": 2 * g.h})
    if unresolved:
        rep.fail(f"{unresolved} instances unresolved up to C={DYADIC[-1]:g}")
    if bt > 2 * c1 * 1.05:
        rep.fail("bounded-turning corollary violated")
    return rep


# ----------------------------------------------------------------------
# rough starlikeness

def _anchor_vertex(g, anchor):
    """Vertex of the usable approximating point furthest along the schedule."""
    best = None
    for R in sorted(anchor.schedule):
        z = anchor_points(g.domain, anchor, R)
        if g.domain.in_window(z)[0] and g.domain.depth(z) >= NEAR_BOUNDARY_CELLS * g.h:
            best = g.snap(z)[0]
    if best is None:
        raise GraphError(f"anchor {anchor.point} has no admissible approximating point")
    return best


def estimate_rough_starlike(g, anchors, samples=40, seed=0, box=None, margin=0.2):
    """K = sup over sampled x of min over anchor-pair geodesics of dist_k(x, gamma)."""
    if len(anchors) < 2:
        raise ValueError("need at least two boundary anchors")
    from ..gromov import sample_vertices

    ends = [_anchor_vertex(g, a) for a in anchors]
    xs = sample_vertices(g, samples, seed, margin=margin, box=box)
    qmat = g.matrix("quasihyperbolic")
    best = np.full(len(xs), np.inf)
    arg = np.full(len(xs), -1)
    geos = []
    for i in range(len(ends)):
        for j in range(i + 1, len(ends)):
            if ends[i] == ends[j] or g.components[ends[i]] != g.components[ends[j]]:
                continue
            geo = _geodesic(g, ends[i], ends[j])
            dist = csgraph.dijkstra(qmat, directed=False, indices=geo.vertices, min_only=True)
            d = dist[xs]
            better = d < best
            best[better] = d[better]
            arg[better] = len(geos)
            geos.append(geo)
    if not geos:
        raise GraphError("no anchor pair yields a geodesic")
    k = int(np.argmax(best))
    K = float(best[k])
    rep = VerificationReport("rough_starlike", {"K": K},
                             witness(g.coords[[xs[k]]], K=K, geodesic=int(arg[k])),
                             {"points": len(xs), "anchor_pairs": len(geos)}, float(g.h), bool(np.isfinite(K)),
                             {"snap_slack": _snap_floor(g, ends)})
    return rep
