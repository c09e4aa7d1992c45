import json
import math

import numpy as np
import pytest

from qhl.geometry import make_domain
from qhl.graph import build_graph
from qhl.modulus import (discrete_modulus, euclidean_problem, loewner_probe,
                         segment_vertices, separation_ratio, shortest_lengths)


def _rectangle(h):
    dom = make_domain({"kind": "polygon", "vertices": [[0, 0], [2, 0], [2, 1], [0, 1]],
                       "window": [[-h / 2, -h / 2], [2 + h / 2, 1 + h / 2]]})
    g = build_graph(dom, h)
    x = g.coords[:, 0]
    return g, np.nonzero(x <= x.min() + 1e-9)[0], np.nonzero(x >= x.max() - 1e-9)[0]


@pytest.fixture(scope="module")
def rect():
    g, E, F = _rectangle(0.025)
    return g, E, F, discrete_modulus(euclidean_problem(g, E, F))


def test_rectangle_oracle(rect):
    g, E, F, sol = rect
    # curves joining the short sides of a 2 x 1 rectangle: height / width
    assert sol.value == pytest.approx(0.5, rel=0.05)
    assert sol.gap <= 0.05 and sol.lower <= sol.value
    prob = euclidean_problem(g, E, F)
    through, _, _ = shortest_lengths(prob, sol.density)
    assert np.min(through) == pytest.approx(1.0)
    assert sol.paths and all(p[0] in E or p[-1] in E for p in sol.paths)


@pytest.mark.slow
def test_annulus_oracle():
    h = 0.05
    dom = make_domain({"kind": "punctured_space", "window": [[-3, -3], [3, 3]]})
    g = build_graph(dom, h)
    r = np.linalg.norm(g.coords, axis=1)
    region = np.nonzero((r >= 1 - 1e-9) & (r <= math.e + 1e-9))[0]
    E = region[r[region] <= 1 + h]
    F = region[r[region] >= math.e - h]
    sol = discrete_modulus(euclidean_problem(g, E, F, region=region))
    assert sol.value == pytest.approx(2 * math.pi, rel=0.05)


def test_empty_family():
    dom = make_domain({"kind": "slit_plane", "window": [[-2, -1], [-0.5, 1]]})
    g = build_graph(dom, 0.1)
    E = g.snap_many([(-1.5, 0.5), (-1.0, 0.5)])
    F = g.snap_many([(-1.5, -0.5), (-1.0, -0.5)])
    sol = discrete_modulus(euclidean_problem(g, E, F))
    assert sol.value == 0.0 and sol.empty_family


def test_problem_validation(rect):
    g, E, F, _ = rect
    with pytest.raises(ValueError, match="disjoint"):
        euclidean_problem(g, E, np.concatenate([F, E[:1]]))
    with pytest.raises(ValueError):
        euclidean_problem(g, [], F)
    with pytest.raises(ValueError):
        euclidean_problem(g, E, F, p=1.0)


def test_monotone_in_E(rect):
    g, E, F, sol = rect
    half = E[: len(E) // 2]
    small = discrete_modulus(euclidean_problem(g, half, F))
    assert small.value <= sol.value * (1 + 1e-3)


def test_solution_outputs(rect):
    g, _, _, sol = rect
    d = json.loads(sol.to_json())
    assert d["value"] == sol.value and d["active_paths"] == len(sol.paths)
    assert sol.density_csv(g.coords).count("\n") == g.n_vertices + 1


def test_separation_ratio():
    E = np.array([[0, 0], [1, 0]])
    F = np.array([[0, 2], [1, 2]])
    assert separation_ratio(E, F) == pytest.approx(2.0)
    assert separation_ratio(E, E + [2, 0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        separation_ratio([[0, 0]], F)


def test_segment_vertices(rect):
    g = rect[0]
    v = segment_vertices(g, (0.5125, 0.4875), (1.4875, 0.4875))
    assert np.allclose(g.coords[v, 1], 0.4875) and len(v) == 40


def test_loewner_probe_monotone():
    dom = make_domain({"kind": "half_space", "window": [[-2, 0], [2, 3]]})
    out = loewner_probe(dom, [1.0, 2.0, 4.0], seed=0, h=0.1, pairs=6, box=[[-1.5, 0.5], [1.5, 2.5]])
    vals = [m for _, m in out]
    assert all(v > 0 for v in vals)
    assert vals[0] >= vals[1] >= vals[2]
    with pytest.raises(ValueError):
        loewner_probe(dom, [0.0], seed=0)
