import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhl.geometry import BoundaryAnchor
from qhl.graph import GraphError, shortest_path
from qhl.verify import (chord_cross_section, cross_section_sides, estimate_rough_starlike,
                        sample_bhk_triples, sample_pairs, uniformity_scale_sweep,
                        verify_bhk314, verify_bhk_uniform_bounds, verify_faltensatz,
                        verify_gehring_hayman, verify_llc, verify_pommerenke,
                        verify_qh_sandwich, verify_separation, verify_uniformity)

from conftest import HP_BOX


@pytest.fixture(scope="module")
def disk_pairs(disk):
    return sample_pairs(disk, 30, 0)


@pytest.fixture(scope="module")
def hp_pairs(hp):
    return sample_pairs(hp, 30, 0, box=HP_BOX)


def test_gehring_hayman(disk_graph, disk_pairs):
    rep = verify_gehring_hayman(disk_graph, disk_pairs)
    # inner shortest paths are never longer than the geodesic
    assert 1.0 <= rep.constant("C_gh") < 1.5 and rep.passed
    assert rep.samples["pairs"] + rep.samples["skipped"] == 30
    with pytest.raises(ValueError, match="at least 30"):
        verify_gehring_hayman(disk_graph, disk_pairs[:10])


def test_separation_and_pommerenke(disk_graph, disk_pairs):
    sp = verify_separation(disk_graph, disk_pairs)
    assert 0 < sp.constant("C_sp") < 2 and sp.samples["competitors"] >= 30
    po = verify_pommerenke(disk_graph, disk_pairs)
    assert 1.0 <= po.constant("R") < 1.5
    assert po.constants["C_po_observed"] <= po.constants["R"] + 1e-12


def test_pommerenke_straight_pairs(hp, hp_graph):
    # vertical pairs in the half-plane have straight geodesics
    rng = np.random.default_rng(3)
    x = np.round(rng.uniform(-1.5, 1.5, 30), 1)
    y0 = np.round(rng.uniform(0.3, 1.0, 30), 1)
    y1 = y0 + np.round(rng.uniform(0.5, 2.5, 30), 1)
    pairs = np.stack([np.column_stack([x, y0]), np.column_stack([x, y1])], axis=1)
    assert verify_pommerenke(hp_graph, pairs).constant("R") == pytest.approx(1.0, abs=0.02)


def test_uniformity(disk_graph, disk_pairs):
    rep = verify_uniformity(disk_graph, disk_pairs)
    assert 1.0 <= rep.constant("A") < 1.5
    assert rep.constant("A") == max(rep.constants["quasiconvexity"], rep.constants["double_cone"])


def test_scale_sweep_half_plane(hp):
    rep = uniformity_scale_sweep(hp)
    assert rep.passed, rep.notes
    assert len(rep.constants["A_by_scale"]) == 3


def test_qh_sandwich_and_bhk_bounds(hp_graph, hp_pairs, disk_graph, disk_pairs):
    for g, pairs in ((hp_graph, hp_pairs), (disk_graph, disk_pairs)):
        assert verify_bhk_uniform_bounds(g, pairs, A=1.2).passed
    near = sample_pairs(hp_graph.domain, 200, 1, box=HP_BOX, min_depth=0.3, max_sep=0.3)
    rep = verify_qh_sandwich(hp_graph, near)
    assert rep.passed and rep.samples["pairs"] > 50


def test_bhk314(hp_graph):
    tr = sample_bhk_triples(hp_graph.domain, 20, 0, box=HP_BOX)
    assert np.all(np.linalg.norm(tr[:, 0] - tr[:, 1], axis=1)
                  >= 2 * np.linalg.norm(tr[:, 0] - tr[:, 2], axis=1))
    rep = verify_bhk314(hp_graph, tr)
    assert np.isfinite(rep.constant("C_A")) and rep.samples["triples"] > 0


def test_cross_sections(disk_graph):
    sigma = chord_cross_section(disk_graph, -0.5)
    lab = cross_section_sides(disk_graph, sigma)
    assert set(np.unique(lab)) == {-1, 0, 1}
    with pytest.raises(GraphError, match="cross-section"):
        cross_section_sides(disk_graph, [])
    with pytest.raises(GraphError, match="cross-section"):
        cross_section_sides(disk_graph, np.nonzero(np.abs(disk_graph.coords[:, 0] + 0.5) < 1e-9)[0][:5])


def test_faltensatz_composed(disk_graph, disk_pairs):
    consts = {"C_gh": verify_gehring_hayman(disk_graph, disk_pairs).constant(),
              "C_sp": verify_separation(disk_graph, disk_pairs).constant(),
              "R": verify_pommerenke(disk_graph, disk_pairs).constant()}
    rep = verify_faltensatz(disk_graph, chord_cross_section(disk_graph, -0.5), constants=consts)
    assert rep.passed and np.isfinite(rep.constant("A"))
    assert set(rep.overlays) <= {"sigma", "L", "alpha", "x"}


def test_llc_disk(disk, disk_graph):
    rep = verify_llc(disk, disk_graph, trials=30, seed=0)
    assert rep.passed and rep.constant("C") <= 4
    with pytest.raises(ValueError):
        verify_llc(disk, disk_graph, trials=5)


def test_rough_starlike(disk_graph):
    anchors = [BoundaryAnchor("point", (math.cos(t), math.sin(t)), None, (2.0, 4.0))
               for t in np.linspace(0, 2 * math.pi, 6, endpoint=False)]
    rep = estimate_rough_starlike(disk_graph, anchors, samples=30, seed=0)
    assert rep.passed and 0 <= rep.constant("K") < 3
    with pytest.raises(ValueError):
        estimate_rough_starlike(disk_graph, anchors[:1])


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.3, 2.5), st.floats(-1.5, 1.5), st.floats(0.3, 2.5))
def test_geodesic_invariants(hp_graph, x0, y0, x1, y1):
    a, b = (x0, y0), (x1, y1)
    va, vb = hp_graph.snap(a)[0], hp_graph.snap(b)[0]
    if va == vb:
        return
    geo = shortest_path(hp_graph, va, vb)
    A, B = hp_graph.coords[[va, vb]]
    chord = np.linalg.norm(A - B)
    assert geo.length("euclidean") >= chord - 1e-12
    assert geo.diameter >= chord - 1e-12
    j = math.log1p(chord / min(A[1], B[1]))
    assert geo.length("quasihyperbolic") >= (1 - 0.02) * j
