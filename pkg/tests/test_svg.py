import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qhl.geometry import DomainError, make_domain
from qhl.graph import shortest_path
from qhl.svg import boundary_polylines, emit_svg

NS = "{http://www.w3.org/2000/svg}"


def test_empty_overlays_are_valid_svg(disk):
    root = ET.fromstring(emit_svg(disk))
    assert root.tag == NS + "svg"
    assert [g.get("id") for g in root.iter(NS + "g")] == ["boundary"]


def test_geodesic_overlay(disk_graph):
    geo = shortest_path(disk_graph, (-0.5, 0.2), (0.5, 0.2))
    root = ET.fromstring(emit_svg(disk_graph.domain, {"geodesic": geo.coords, "x": [0, 0]}))
    groups = {g.get("id"): g for g in root.iter(NS + "g")}
    assert set(groups) == {"boundary", "geodesic", "x"}
    assert len(groups["geodesic"].findall(NS + "polyline")) == 1
    assert len(groups["x"].findall(NS + "circle")) == 1


def test_y_axis_points_up(disk):
    root = ET.fromstring(emit_svg(disk, {"points": [[0, 0.9], [0, -0.9]]}))
    c = [float(e.get("cy")) for g in root.iter(NS + "g") if g.get("id") == "points"
         for e in g.findall(NS + "circle")]
    assert c[0] < c[1]


def test_3d_raises():
    dom = make_domain({"kind": "ball", "r": 1, "dim": 3})
    with pytest.raises(DomainError, match="2-D"):
        emit_svg(dom)


def test_deterministic(disk):
    ov = {"b": np.array([[0.1, 0.2], [0.3, 0.4]]), "a": np.array([[0.0, 0.0]])}
    s = emit_svg(disk, ov)
    assert s == emit_svg(disk, dict(reversed(list(ov.items()))))
    assert s.index('id="a"') < s.index('id="b"')


@pytest.mark.parametrize("spec", [
    {"kind": "half_space", "window": [[-1, 0], [1, 1]]},
    {"kind": "slit_plane", "window": [[-1, -1], [1, 1]]},
    {"kind": "cusp", "power": 2},
    {"kind": "l_shape"},
    {"kind": "punctured_space", "window": [[-1, -1], [1, 1]]},
])
def test_boundary_kinds(spec):
    dom = make_domain(spec)
    assert all(p.shape[1] == 2 for p in boundary_polylines(dom))
    ET.fromstring(emit_svg(dom))
