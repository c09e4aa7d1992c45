import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhl.geometry import (BoundaryAnchor, DomainError, NotInteriorError, anchor_points,
                          dist_boundary, make_domain, sample_boundary, sample_interior,
                          segment_distance, vertical_infinity)

SPECS = [
    {"kind": "half_space"},
    {"kind": "ball", "r": 1},
    {"kind": "punctured_space"},
    {"kind": "slit_plane"},
    {"kind": "l_shape"},
    {"kind": "polygon", "vertices": [[0, 0], [3, 0], [1, 2]]},
    {"kind": "cusp", "power": 2},
    {"kind": "ball", "r": 1, "dim": 3},
    {"kind": "half_space", "dim": 3},
]


def test_canonical_instances():
    hp = make_domain({"kind": "half_space", "n": 2})
    assert hp.contains([[0, 1]])[0] and not hp.contains([[0, -1]])[0]
    disk = make_domain({"kind": "ball", "r": 1})
    assert disk.bounded
    cusp = make_domain({"kind": "cusp", "power": 2})
    assert cusp.contains([[0.5, 0.2]])[0] and not cusp.contains([[0.5, 0.3]])[0]


@pytest.mark.parametrize("spec", [{"kind": "torus"}, {"kind": "ball", "r": 0},
                                  {"kind": "ball", "r": -1}, {"kind": "cusp", "power": 1},
                                  {"kind": "polygon", "vertices": [[0, 0], [1, 1], [2, 2]]},
                                  {"kind": "slit_plane", "dim": 3}])
def test_make_domain_rejects(spec):
    with pytest.raises(DomainError):
        make_domain(spec)


def test_json_roundtrip():
    d = make_domain({"kind": "l_shape", "size": 2})
    again = type(d).from_json(d.to_json())
    assert again.to_json() == d.to_json()
    assert json.loads(d.to_json())["kind"] == "l_shape"


def test_dist_boundary_examples():
    hp = make_domain({"kind": "half_space"})
    assert dist_boundary(hp, (0, 1)) == 1
    disk = make_domain({"kind": "ball", "r": 1})
    assert dist_boundary(disk, (0.5, 0)) == pytest.approx(0.5)
    with pytest.raises(NotInteriorError, match="not interior"):
        dist_boundary(disk, (1.0, 0.0))
    with pytest.raises(NotInteriorError):
        dist_boundary(hp, (0.0, -0.5))


def test_l_shape_depth_matches_dense_boundary_samples():
    dom = make_domain({"kind": "l_shape"})
    v = np.asarray(dom.params["vertices"])
    t = np.linspace(0, 1, 166_667, endpoint=False)
    bd = np.concatenate([a + t[:, None] * (b - a) for a, b in zip(v, np.roll(v, -1, axis=0))])
    bd = np.vstack([bd, v])     # corners are exact samples
    for p in ([0.95, 0.95], [1.2, 0.99], [0.9, 1.3], [0.5, 0.5]):
        brute = np.min(np.linalg.norm(bd - np.asarray(p), axis=1))
        assert abs(dist_boundary(dom, p) - brute) < 1e-9


def test_segment_distance_oracle():
    a, b = np.array([[0.0, 0.0]]), np.array([[2.0, 0.0]])
    pts = np.array([[1.0, 1.0], [-1.0, 0.0], [3.0, 4.0]])
    assert np.allclose(segment_distance(pts, a, b)[:, 0], [1.0, 1.0, np.hypot(1, 4)])


@pytest.mark.parametrize("spec", SPECS)
def test_sign_consistency_and_lipschitz(spec):
    dom = make_domain(spec)
    rng = np.random.default_rng(0)
    lo, hi = dom.window
    p = rng.uniform(lo, hi, size=(10_000, dom.dim))
    d = dom.depth(p)
    assert np.array_equal(dom.contains(p), d > 0)
    q = p + rng.normal(scale=0.05, size=p.shape)
    dq = dom.depth(q)
    both = (d > 0) & (dq > 0)
    assert np.all(np.abs(d - dq)[both] <= np.linalg.norm(p - q, axis=1)[both] + 1e-9)


def test_sample_interior_deterministic():
    hp = make_domain({"kind": "half_space"})
    a = sample_interior(hp, 3, seed=7)
    b = sample_interior(hp, 3, seed=7)
    assert a.shape == (3, 2) and a.tobytes() == b.tobytes()
    disk = make_domain({"kind": "ball", "r": 1})
    pts = sample_interior(disk, 1000, seed=1)
    assert np.all(disk.depth(pts) > 0)


def test_cusp_stratified_reaches_deep():
    cusp = make_domain({"kind": "cusp", "power": 2})
    pts = sample_interior(cusp, 100, seed=3, stratified=True)
    d = cusp.depth(pts)
    assert np.all(d > 0) and d.min() < 1e-3


def test_sample_boundary_examples():
    hp = make_domain({"kind": "half_space"})
    assert np.all(sample_boundary(hp, 50, 0)[:, 1] == 0)
    disk = make_domain({"kind": "ball", "r": 1})
    assert np.allclose(np.linalg.norm(sample_boundary(disk, 50, 0), axis=1), 1, atol=1e-12)
    poly = make_domain({"kind": "polygon", "vertices": [[0, 0], [3, 0], [3, 1], [0, 1]]})
    pts = sample_boundary(poly, 800, 5)
    bottom = np.sum(np.isclose(pts[:, 1], 0) & (pts[:, 0] > 0) & (pts[:, 0] < 3))
    right = np.sum(np.isclose(pts[:, 0], 3) & (pts[:, 1] > 0) & (pts[:, 1] < 1))
    assert bottom == 300 and right == 100     # proportional to edge length 3 : 1 out of perimeter 8
    with pytest.raises(DomainError):
        sample_boundary(hp, 0, 0)


def test_anchor_examples():
    hp = make_domain({"kind": "half_space", "window": [[-2, 0], [2, 200]]})
    z = anchor_points(hp, vertical_infinity(2), 100)
    assert np.allclose(z, [0, 100])
    disk = make_domain({"kind": "ball", "r": 1})
    z = anchor_points(disk, BoundaryAnchor("point", (1.0, 0.0)), 100)
    assert np.allclose(z, [1 - 1 / 100, 0])
    z = anchor_points(hp, BoundaryAnchor("point", (3.0, 0.0)), 10)
    assert np.allclose(z, [3, 0.1])
    with pytest.raises(DomainError):
        anchor_points(disk, vertical_infinity(2), 10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_depth_lipschitz_property(x1, y1, x2, y2):
    for spec in SPECS[:7]:
        dom = make_domain(spec)
        d = dom.depth(np.array([[x1, y1], [x2, y2]]))
        assert abs(d[0] - d[1]) <= np.hypot(x1 - x2, y1 - y2) + 1e-9
