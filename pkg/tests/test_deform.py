import numpy as np
import pytest

from qhl.deform import d_eps_distance, deform, k_eps_distance, mu_eps
from qhl.geometry import make_domain, vertical_infinity
from qhl.graph import Path, build_graph
from qhl.gromov import busemann_field, choose_epsilon

from conftest import HP_DELTA

EPS = choose_epsilon(HP_DELTA)


@pytest.fixture(scope="module")
def dg(hp_graph, hp_field):
    return deform(hp_graph, hp_field, EPS)


def test_zero_field_gives_qh_weights(hp_graph, hp_field):
    import dataclasses
    flat = dataclasses.replace(hp_field, values=np.zeros_like(hp_field.values))
    d = deform(hp_graph, flat, 0.3)
    assert np.array_equal(d.graph.deformed_weight, hp_graph.qh_weight)
    with pytest.raises(ValueError):
        deform(hp_graph, hp_field, 0.0)


def test_vertical_path_oracle(hp_graph, dg):
    for t in (2.0, 3.0):
        xs = hp_graph.coords
        line = np.nonzero((np.abs(xs[:, 0]) < 1e-9) & (xs[:, 1] >= 1 - 1e-9) & (xs[:, 1] <= t + 1e-9))[0]
        line = line[np.argsort(xs[line, 1])]
        length = Path(dg.graph, line).length("deformed")
        assert length == pytest.approx((t ** EPS - 1) / EPS, rel=0.03)


def test_boundary_distance_oracle(hp_graph, dg):
    v = hp_graph.snap((0, 1))[0]
    assert dg.d_eps[v] == pytest.approx(1 / EPS, rel=0.05)
    assert np.all(dg.graph.deformed_weight > 0)


def test_d_eps_basics(hp_graph, dg):
    assert d_eps_distance(dg, (0, 1), (0, 1)) == 0
    u, v = hp_graph.edges[1234]
    expect = hp_graph.qh_weight[1234] * 0.5 * (dg.rho[u] + dg.rho[v])
    # a single edge is a shortest path unless a detour is cheaper
    assert d_eps_distance(dg, int(u), int(v)) <= expect + 1e-15
    assert dg.graph.deformed_weight[1234] == pytest.approx(expect)
    a, b = (0.3, 1.2), (-0.7, 2.1)
    assert d_eps_distance(dg, a, b) == pytest.approx(d_eps_distance(dg, b, a))
    assert k_eps_distance(dg, a, a) == 0


def test_unbounded_along_vertical():
    dom = make_domain({"kind": "half_space", "window": [[-4, 0], [4, 40]]})
    g = build_graph(dom, 0.1)
    f = busemann_field(g, (0, 1), vertical_infinity(2), 18.0)
    d = deform(g, f, EPS)
    vals = [d_eps_distance(d, (0, 1), (0, t)) for t in (2, 4, 8, 16)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    for t, v in zip((2, 4, 8, 16), vals):
        assert v == pytest.approx((t ** EPS - 1) / EPS, rel=0.05)


def test_mu_eps(hp_graph, dg):
    assert mu_eps(dg, []) == 0.0
    xs = hp_graph.coords
    sq = np.nonzero((xs[:, 0] >= -1e-9) & (xs[:, 0] <= 1 + 1e-9)
                    & (xs[:, 1] >= 1 - 1e-9) & (xs[:, 1] <= 2 + 1e-9))[0]
    a, b = sq[: len(sq) // 2], sq[len(sq) // 2:]
    assert mu_eps(dg, sq) == pytest.approx(mu_eps(dg, a) + mu_eps(dg, b))


def test_mu_eps_unit_square():
    # shift the lattice by h/2 so that cells tile [0,1] x [1,2] exactly
    h = 0.05
    dom = make_domain({"kind": "half_space", "window": [[-2 - h / 2, -h / 2], [2 + h / 2, 6 - h / 2]]})
    g = build_graph(dom, h)
    d = deform(g, busemann_field(g, (h / 2, 1 + h / 2), vertical_infinity(2), 2.5), EPS)
    xs = g.coords
    sq = np.nonzero((xs[:, 0] > 0) & (xs[:, 0] < 1) & (xs[:, 1] > 1) & (xs[:, 1] < 2))[0]
    assert len(sq) == 400
    unit = (2 ** (2 * EPS - 1) - 1) / (2 * EPS - 1)
    assert mu_eps(d, sq) == pytest.approx(unit, rel=0.03)


def test_harnack_per_edge(hp_graph, dg):
    e = hp_graph.edges
    lr = np.log(dg.rho)
    excess = np.abs(lr[e[:, 0]] - lr[e[:, 1]]) - EPS * hp_graph.qh_weight
    assert np.all(excess <= 10 * EPS * HP_DELTA)


def test_k_eps_comparable(hp_graph, dg):
    from qhl.qhyp import qh_distance
    a, b = (0.3, 1.2), (-0.7, 2.1)
    k = qh_distance(hp_graph, a, b)
    ke = k_eps_distance(dg, a, b)
    # in the half-plane k_eps is eps * k up to discretization
    assert ke == pytest.approx(EPS * k, rel=0.1)
