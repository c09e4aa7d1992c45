"""Verifiers for the deformed space and the boundary at infinity."""

from __future__ import annotations

import math

import numpy as np

from ..deform import d_eps_rows, k_eps_rows
from ..geometry import DomainError, sample_boundary
from ..graph import GraphError, Path, distances_from, shortest_path
from ..gromov import ProxyError, boundary_proxy, hamenstadt_table
from ..qhyp import NEAR_BOUNDARY_CELLS
from .curves import _vertex_pairs
from .report import DELTA_HEDGE, VerificationReport, witness

QS_LAMBDA_MAX = 100.0


# ----------------------------------------------------------------------
# boundary quasisymmetry

def _boundary_points(dom, g, count, seed, box, margin=0.25):
    """Distinct-proxy boundary points, ``margin`` away from artificial window faces."""
    pts, seen = [], set()
    for k in range(20):
        cand = sample_boundary(dom, 8 * count, seed + k)
        ok = dom.in_window(cand, margin)
        if box is not None:
            box = np.asarray(box, float)
            ok &= np.all((cand >= box[0]) & (cand <= box[1]), axis=1)
        for q in cand[ok]:
            try:
                v = boundary_proxy(g, q)
            except ProxyError:
                continue
            if v in seen:
                continue
            seen.add(v)
            pts.append(q)
            if len(pts) == count:
                return np.asarray(pts)
    if len(pts) < 8:
        raise DomainError(f"only {len(pts)} boundary points with distinct proxies in the window")
    return np.asarray(pts)


def qs_envelope(t, T, eps, alpha_max, n_alpha=61):
    """lambda(alpha) = max T / max(t^(eps alpha), t^(eps / alpha)) on a log grid of alpha."""
    alphas = np.geomspace(1.0, alpha_max, n_alpha)
    lt = np.log(t)
    lam = np.array([np.max(T / np.exp(np.maximum(eps * a * lt, eps / a * lt))) for a in alphas])
    return alphas, lam


def triple_ratios(table, idx):
    """Euclidean and deformed-boundary ratios t = |x-a|/|x-b|, T = d(x,a)/d(x,b)
    for index triples (x, a, b) into the table points; T = 1 when a = b."""
    i, j, k = np.asarray(idx, dtype=int).T
    pts = table.points
    eu = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    t = eu[i, j] / eu[i, k]
    T = table.d[i, j] / table.d[i, k]
    T[j == k] = 1.0
    return t, T


def verify_boundary_qs(dom, g, field, eps, triples=500, seed=0, A=None, n_points=60, box=None):
    """Fit T <= lambda * max(t^(eps alpha), t^(eps / alpha)) over boundary triples.

    ``triples`` is either a count (seeded triples of sampled boundary points)
    or an explicit array of shape (m, 3, dim) holding (x, a, b).  The
    exponent window is scanned up to alpha_max = 4 A^2; the reported alpha
    is the knee, the smallest one whose lambda is within a factor 2 of
    lambda(alpha_max).
    """
    if np.isscalar(triples):
        pts = _boundary_points(dom, g, n_points, seed, box)
        rng = np.random.default_rng(seed)
        m = len(pts)
        idx = []
        while len(idx) < int(triples):
            i, j, k = rng.integers(0, m, 3)
            if i != j and i != k:
                idx.append((i, j, k))
        idx = np.asarray(idx)
    else:
        tri = np.asarray(triples, float)
        if tri.ndim != 3 or tri.shape[1] != 3:
            raise ValueError("triples must have shape (m, 3, dim)")
        flat = tri.reshape(-1, tri.shape[2])
        pts, inv = np.unique(flat, axis=0, return_inverse=True)
        idx = inv.reshape(-1, 3)
        bad = (idx[:, 0] == idx[:, 1]) | (idx[:, 0] == idx[:, 2])
        if bad.any():
            raise ValueError("degenerate triple: x coincides with a or b")
    table = hamenstadt_table(field, g, pts, eps)
    t, T = triple_ratios(table, idx)
    A = 2.0 if A is None else float(A)
    alpha_max = 4.0 * A * A
    alphas, lam = qs_envelope(t, T, eps, alpha_max)
    knee = int(np.argmax(lam <= 2.0 * lam[-1]))
    alpha, lam_k = float(alphas[knee]), float(lam[knee])
    bound = lam_k * np.maximum(t ** (eps * alpha), t ** (eps / alpha))
    w = int(np.argmax(T / bound))
    rep = VerificationReport(
        "boundary_qs",
        {"lambda": lam_k, "alpha": alpha, "alpha_max": alpha_max, "exponent_low": eps / alpha,
         "exponent_high": eps * alpha, "lambda_at_alpha_max": float(lam[-1])},
        witness(pts[idx[w]], t=float(t[w]), T=float(T[w])),
        {"triples": len(idx), "boundary_points": len(pts)}, float(g.h), True,
        {"proxy_depth_max": float(table.proxy_depth.max()), "anchor_slack": float(field.snap_slack),
         "lambda_max": QS_LAMBDA_MAX},
        details={"alphas": alphas, "lambdas": lam})
    rep.overlays = {"points": pts}
    if not lam_k <= QS_LAMBDA_MAX:
        rep.fail("no envelope with lambda <= 100")
    return rep


# ----------------------------------------------------------------------
# deformation

def _group_by_source(vp):
    groups = {}
    for vx, vy in vp:
        groups.setdefault(vx, []).append(vy)
    return groups


def harnack_check(g, dg, delta, pairs=None):
    """Worst excess of |log rho(u) - log rho(v)| over eps k(u, v) + 10 eps delta.

    Edges use the edge weight as k; pairs use graph distances, computed one
    Dijkstra per distinct source.  A nonpositive excess means the inequality
    holds everywhere it was checked.
    """
    eps = dg.eps
    lr = np.log(dg.rho)
    e = g.edges
    hedge = 10.0 * eps * delta
    edge_excess = np.abs(lr[e[:, 0]] - lr[e[:, 1]]) - eps * g.qh_weight - hedge
    out = {"edges": len(e), "edge_violations": int(np.sum(edge_excess > 1e-12)),
           "edge_excess": float(edge_excess.max()), "pair_excess": -math.inf, "pair_violations": 0,
           "pairs": 0}
    if pairs is not None and len(pairs):
        groups = _group_by_source(pairs)
        src = np.array(list(groups), dtype=int)
        rows = distances_from(g, src)
        for r, s in enumerate(src):
            tg = np.asarray(groups[s], dtype=int)
            ex = np.abs(lr[s] - lr[tg]) - eps * rows[r, tg] - hedge
            out["pair_excess"] = max(out["pair_excess"], float(ex.max()))
            out["pair_violations"] += int(np.sum(ex > 1e-12))
            out["pairs"] += len(tg)
    return out


def random_vertex_pairs(g, count, seed, min_depth=None, margin=0.2):
    min_depth = NEAR_BOUNDARY_CELLS * g.h if min_depth is None else min_depth
    cand = np.nonzero((g.depth >= min_depth) & g.domain.in_window(g.coords, margin))[0]
    rng = np.random.default_rng(seed)
    # a few sources with many targets each keeps the Dijkstra count low
    n_src = max(1, int(math.sqrt(count)))
    src = rng.choice(cand, n_src, replace=False)
    out = []
    while len(out) < count:
        s = src[len(out) % n_src]
        t = int(cand[rng.integers(0, len(cand))])
        if t != s and g.components[t] == g.components[s]:
            out.append((int(s), t))
    return out


def verify_deformation_bounds(g, dg, pairs, delta, harnack_pairs=500, seed=0):
    """Fitted M and C_delta for the deformed space, plus the Harnack inequality.

    M = sup max(k_eps / k, k / k_eps); C_delta = sup of the two-sided ratio
    between d_eps(x, y) and exp(-eps (x|y)_b) min(1, eps k(x, y)) / eps.
    Harnack uses the hedged delta.
    """
    eps = dg.eps
    b = dg.field.values
    vp, skipped = _vertex_pairs(g, pairs)
    if not vp:
        raise GraphError("no admissible pair")
    groups = _group_by_source(vp)
    src = np.array(list(groups), dtype=int)
    K = distances_from(g, src)
    Ke = k_eps_rows(dg, src)
    De = d_eps_rows(dg, src)
    M, C, wm, wc = 0.0, 0.0, None, None
    lo_c, hi_c = math.inf, 0.0
    for r, s in enumerate(src):
        tg = np.asarray(groups[s], dtype=int)
        k, ke, de = K[r, tg], Ke[r, tg], De[r, tg]
        m = np.maximum(ke / k, k / ke)
        j = int(np.argmax(m))
        if m[j] > M:
            M, wm = float(m[j]), (s, tg[j], k[j], ke[j])
        gp = 0.5 * (b[s] + b[tg] - k)
        model = np.exp(-eps * gp) * np.minimum(1.0, eps * k) / eps
        q = de / model
        lo_c, hi_c = min(lo_c, float(q.min())), max(hi_c, float(q.max()))
        c = np.maximum(q, 1 / q)
        j = int(np.argmax(c))
        if c[j] > C:
            C, wc = float(c[j]), (s, tg[j], de[j], model[j])
    dh = DELTA_HEDGE * delta
    hp = random_vertex_pairs(g, harnack_pairs, seed) if harnack_pairs else None
    har = harnack_check(g, dg, dh, hp)
    s, t, k, ke = wm
    rep = VerificationReport(
        "deformation_bounds",
        {"M": M, "C_delta": C, "C_delta_lower": lo_c, "C_delta_upper": hi_c,
         "harnack_edge_excess": har["edge_excess"], "harnack_pair_excess": har["pair_excess"]},
        witness(g.coords[[s, t]], k=k, k_eps=ke, M=M),
        {"pairs": len(vp), "skipped": skipped, "harnack_edges": har["edges"],
         "harnack_pairs": har["pairs"]},
        float(g.h), True,
        {"snap_slack": float(2.0 * g.h / g.depth[src].min()), "delta_hedge": DELTA_HEDGE,
         "delta_hat": float(delta), "harnack_hedge": 10.0 * eps * dh,
         "anchor_slack": float(dg.field.gap.max()), "eps": eps},
        details={"C_delta_witness": {"points": g.coords[[wc[0], wc[1]]], "d_eps": wc[2], "model": wc[3]}})
    if not (np.isfinite(M) and np.isfinite(C)):
        rep.fail("non-finite constant")
    if har["edge_violations"] or har["pair_violations"]:
        rep.fail("harnack violated")
    rep.samples["harnack_violations"] = har["edge_violations"] + har["pair_violations"]
    return rep


def verify_deformed_uniformity(g, dg, pairs):
    """Quasihyperbolic geodesics re-measured in (d_eps, d_eps(.)): A_eps = max of
    quasiconvexity and double-cone ratios."""
    vp, skipped = _vertex_pairs(g, pairs)
    if not vp:
        raise GraphError("no admissible pair")
    groups = _group_by_source(vp)
    qc, cone, wq, wc = 0.0, 0.0, None, None
    for s, tg in groups.items():
        de = d_eps_rows(dg, [s])[0]
        for t in tg:
            geo = shortest_path(g, s, t, "quasihyperbolic")
            cum = Path(dg.graph, geo.vertices).cumulative("deformed")
            total = cum[-1]
            r = total / de[t]
            if r > qc:
                qc, wq = float(r), (s, t)
            c = np.minimum(cum, total - cum) / dg.d_eps[geo.vertices]
            j = int(np.argmax(c))
            if c[j] > cone:
                cone, wc = float(c[j]), (s, t, int(geo.vertices[j]))
    A = max(qc, cone)
    pts = g.coords[list(wq)] if qc >= cone else g.coords[list(wc)]
    rep = VerificationReport("deformed_uniformity", {"A": A, "quasiconvexity": qc, "double_cone": cone},
                             witness(pts, A=A), {"pairs": len(vp), "skipped": skipped}, float(g.h), True,
                             {"tail_max": float(dg.tail[dg.proxies].max()) if len(dg.proxies) else 0.0})
    if not np.isfinite(A):
        rep.fail("non-finite constant")
    return rep


def local_qs_radius(M):
    return math.log(1.5) / (8.0 * M)


def verify_local_qs(g, dg, M, A, centers, triples_per_center=40, seed=0):
    """Distortion d_eps(x,y)/d_eps(x,z) against 64 A^2 M^2 |x-y|/|x-z| for
    triples in B(x0, q1 d(x0)), q1 = log(3/2) / (8 M)."""
    q1 = local_qs_radius(M)
    theta = 64.0 * A * A * M * M
    rng = np.random.default_rng(seed)
    worst, wit, n_tri, skipped = 0.0, None, 0, 0
    for c in np.atleast_2d(np.asarray(centers, float)):
        v0, _ = g.snap(c)
        rad = q1 * g.depth[v0]
        ball = np.nonzero(np.linalg.norm(g.coords - g.coords[v0], axis=1) < rad)[0]
        if len(ball) < 3:
            skipped += 1
            continue
        xs = ball[rng.integers(0, len(ball), triples_per_center)]
        D = d_eps_rows(dg, np.unique(xs))
        row = {int(x): i for i, x in enumerate(np.unique(xs))}
        for x in xs:
            y, z = ball[rng.integers(0, len(ball), 2)]
            if len({int(x), int(y), int(z)}) < 3:
                continue
            n_tri += 1
            ratio = D[row[int(x)], y] / D[row[int(x)], z]
            t = np.linalg.norm(g.coords[x] - g.coords[y]) / np.linalg.norm(g.coords[x] - g.coords[z])
            r = ratio / t
            if r > worst:
                worst, wit = float(r), (int(x), int(y), int(z), float(ratio), float(t))
    if wit is None:
        raise GraphError("local balls contain too few vertices; refine h")
    x, y, z, ratio, t = wit
    rep = VerificationReport("local_qs", {"distortion_over_t": worst, "theta_slope": theta, "q1": q1},
                             witness(g.coords[[x, y, z]], ratio=ratio, t=t),
                             {"triples": n_tri, "skipped_centers": skipped}, float(g.h), True,
                             {"M": float(M), "A": float(A)})
    if worst > theta:
        rep.fail("local quasisymmetry violated")
    return rep


# ----------------------------------------------------------------------
# refinement stability

def refinement_check(run, h, tol=0.15, keys=None):
    """Run ``run(h)`` and ``run(h / 2)``; fail the fine report when a fitted
    constant drifts by more than ``tol`` relative to the coarse one."""
    coarse, fine = run(h), run(h / 2)
    keys = keys or [k for k, v in coarse.constants.items() if isinstance(v, (int, float))]
    drift = {}
    for k in keys:
        a, b = float(coarse.constants[k]), float(fine.constants[k])
        drift[k] = abs(b - a) / max(abs(a), 1e-12) if a != b else 0.0
    fine.details["refinement"] = {"h_coarse": h, "coarse": {k: coarse.constants[k] for k in keys},
                                  "drift": drift}
    fine.tolerances["refinement"] = tol
    if any(v > tol for v in drift.values()):
        fine.fail("unconverged")
    if not coarse.passed:
        for n in coarse.notes:
            fine.fail(f"coarse: {n}")
    return fine
