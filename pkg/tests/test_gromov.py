import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from qhl.geometry import make_domain, sample_boundary, vertical_infinity
from qhl.graph import GraphError, build_graph, distances_from, shortest_path
from qhl.gromov import (AnchorError, busemann_field, chain_metric, choose_epsilon,
                        delta_from_distances, estimate_delta, four_point_defects,
                        gromov_product, gromov_product_busemann, hamenstadt_table)
from qhl.verify import sample_points

from conftest import HP_BOX, HP_DELTA


def _tree(n_nodes, seed):
    rng = np.random.default_rng(seed)
    parent = [rng.integers(0, i) for i in range(1, n_nodes)]
    w = rng.integers(1, 5, n_nodes - 1).astype(float)  # exact sums
    return sparse.csr_matrix((w, (np.arange(1, n_nodes), parent)), shape=(n_nodes, n_nodes))


def test_tree_is_zero_hyperbolic():
    est = estimate_delta(_tree(40, 1), 40, seed=0)
    assert est.delta == 0.0 and est.mode == "exhaustive-on-subsample"


def test_repeated_point_contributes_nothing():
    D = np.array([[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], float)
    assert four_point_defects(D, np.array([[0, 0, 2, 3], [1, 2, 1, 3]])).max() <= 0
    assert delta_from_distances(D)[0] == 0


def test_estimate_delta_errors(hp_graph):
    with pytest.raises(ValueError):
        estimate_delta(hp_graph, 3, 0)
    g = build_graph(make_domain({"kind": "slit_plane", "window": [[-2, -1], [-0.5, 1]]}), 0.1)
    pts = [(-1, 0.5), (-1.5, 0.5), (-1, -0.5), (-1.5, -0.5)]
    with pytest.raises(GraphError, match="disconnected"):
        estimate_delta(g, 4, 0, points=pts)


def test_delta_reproducible(hp_graph):
    a = estimate_delta(hp_graph, 30, 4, n_quadruples=5000, box=HP_BOX)
    b = estimate_delta(hp_graph, 30, 4, n_quadruples=5000, box=HP_BOX)
    assert a.delta == b.delta and a.witness == b.witness and a.mode == "seeded-random"


def test_choose_epsilon_examples():
    assert choose_epsilon(1.0) == pytest.approx(math.log(2) / 22)
    assert math.exp(22 * choose_epsilon(1.0) * 1.0) == pytest.approx(2.0)
    assert choose_epsilon(0.0) == pytest.approx(math.log(2) / 2.2)
    assert choose_epsilon(0.5) == pytest.approx(0.06301, abs=1e-5)
    with pytest.raises(ValueError):
        choose_epsilon(-0.1)


def test_gromov_product_examples(hp_graph):
    o, x, y = (0, 1), (-1, 0.1), (1, 0.1)
    kxo = shortest_path(hp_graph, x, o).length("quasihyperbolic")
    assert gromov_product(hp_graph, x, x, o) == pytest.approx(kxo)
    assert gromov_product(hp_graph, x, o, o) == pytest.approx(0, abs=1e-12)
    geo = shortest_path(hp_graph, x, y)
    dist_o = distances_from(hp_graph, [hp_graph.snap(o)[0]])[0, geo.vertices].min()
    gp = gromov_product(hp_graph, x, y, o)
    assert dist_o - 2 * HP_DELTA <= gp <= dist_o + 1e-9


def test_busemann_examples():
    dom = make_domain({"kind": "half_space", "window": [[-4, 0], [4, 8]]})
    g = build_graph(dom, 0.02)
    f = busemann_field(g, (0, 1), vertical_infinity(2), 3.0)
    assert f.at(g, (0, 1)) == 0.0
    assert f.at(g, (0, math.e)) == pytest.approx(-1, abs=0.05)
    assert f.at(g, (0, 1 / math.e)) == pytest.approx(1, abs=0.05)


def test_anchor_outside_window(hp_graph):
    with pytest.raises(AnchorError):
        busemann_field(hp_graph, (0, 1), vertical_infinity(2), 6.0)


def test_busemann_products(hp_graph, hp_field):
    f = hp_field
    x = (0.5, 1.5)
    assert gromov_product_busemann(f, hp_graph, x, x) == pytest.approx(f.at(hp_graph, x))
    assert gromov_product_busemann(f, hp_graph, (0, 1), (0, 1)) == 0.0


def test_busemann_lipschitz_and_anchor_stability(hp_graph, hp_field):
    f = hp_field
    gap_bound = 4 * HP_DELTA + 2 * f.snap_slack
    assert np.all(f.gap <= gap_bound)
    pts = sample_points(hp_graph.domain, 40, 3, box=HP_BOX)
    v = hp_graph.snap_many(pts)
    K = distances_from(hp_graph, v)[:, v]
    diff = np.abs(f.values[v][:, None] - f.values[v][None, :])
    assert np.all(diff <= K + 10 * HP_DELTA + f.snap_slack + 1e-12)
    # anchor differencing makes b exactly 1-Lipschitz on the graph
    assert np.all(diff <= K + 1e-9)


def test_busemann_product_against_base_products(hp_graph, hp_field):
    """(x|y)_b versus (x|y)_o - (x|xi)_o - (y|xi)_o with xi realised by the far anchor."""
    f = hp_field
    pts = sample_points(hp_graph.domain, 21, 5, box=HP_BOX)
    v = hp_graph.snap_many(pts)
    far = f.anchor_vertices[1]
    o = f.base_vertex
    rows = distances_from(hp_graph, np.concatenate([v, [o, far]]))
    K, ko, kz = rows[:-2][:, v], rows[-2], rows[-1]
    slack = 10 * HP_DELTA + f.gap.max()
    n = 0
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            a, b = v[i], v[j]
            lhs = 0.5 * (f.values[a] + f.values[b] - K[i, j])
            gp_o = 0.5 * (ko[a] + ko[b] - K[i, j])
            xa = 0.5 * (ko[a] + ko[far] - kz[a])
            xb = 0.5 * (ko[b] + ko[far] - kz[b])
            assert lhs - 10 * HP_DELTA <= gp_o - xa - xb + slack
            n += 1
    assert n >= 200


def test_shadow_products_stable(hp_graph, hp_field):
    anchor = vertical_infinity(2, schedule=(3.0, 4.5, 6.0))
    from qhl.geometry import anchor_points
    zs = [hp_graph.snap(anchor_points(hp_graph.domain, anchor, R))[0] for R in anchor.schedule]
    o = hp_graph.snap((0, 1))[0]
    pts = hp_graph.snap_many(sample_points(hp_graph.domain, 20, 8, box=HP_BOX))
    rows = distances_from(hp_graph, np.concatenate([[o], zs]))
    ko = rows[0]
    prods = np.array([0.5 * (ko[pts] + ko[z] - rows[1 + i][pts]) for i, z in enumerate(zs)])
    assert np.all(prods.max(axis=0) - prods.min(axis=0) <= HP_DELTA + 2 * hp_field.snap_slack)


@pytest.fixture(scope="module")
def table(hp_graph, hp_field):
    bp = sample_boundary(hp_graph.domain, 400, 0)
    bp = bp[np.abs(bp[:, 0]) < 2][:50]
    return hamenstadt_table(hp_field, hp_graph, bp, choose_epsilon(HP_DELTA))


def test_hamenstadt_sandwich_and_triangle(table):
    off = ~np.eye(len(table.d), dtype=bool)
    assert np.all(table.d[off] <= table.rho[off])
    assert np.all(table.d[off] >= 0.5 * table.rho[off])
    d = table.d
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-15)
    # shared proxy on the diagonal: rho = exp(-eps b(p)) and d = 0 <= rho
    b = table.gp.diagonal()
    assert np.allclose(table.rho.diagonal(), np.exp(-table.eps * b))


def test_hamenstadt_quasimetric(table):
    rho = table.rho
    K = math.exp(22 * table.eps * HP_DELTA)
    n = len(rho)
    idx = np.array([(a, b, c) for a in range(n) for b in range(n) for c in range(n)
                    if a != b and b != c and a != c])
    a, b, c = idx.T
    assert np.all(rho[a, c] <= K * np.maximum(rho[a, b], rho[b, c]))


def test_snowflake_comparability(table):
    u = table.points[:, 0]
    off = ~np.eye(len(u), dtype=bool)
    r = table.d[off] / np.abs(u[:, None] - u[None, :])[off] ** table.eps
    assert r.min() >= 0.25 and r.max() <= 4.0


def test_two_point_table(hp_graph, hp_field):
    t = hamenstadt_table(hp_field, hp_graph, [(-1, 0), (1, 0)], 0.05)
    assert t.d[0, 1] == t.rho[0, 1]
    with pytest.raises(ValueError):
        hamenstadt_table(hp_field, hp_graph, [(-1, 0), (-1, 0)], 0.05)


def test_table_csv(table, tmp_path):
    table.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("i,j,") and len(lines) == 1 + len(table.d) ** 2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 5.0), min_size=9, max_size=9))
def test_chain_metric_properties(vals):
    a = np.array(vals).reshape(3, 3)
    rho = np.minimum(a, a.T)
    d = chain_metric(rho)
    off = ~np.eye(3, dtype=bool)
    assert np.all(d[off] <= rho[off])
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)
