import pytest
from hypothesis import given, strategies as st

from qdgadget.lattice import (BL, BR, CORNER_NAMES, TL, TR, Corner, LatticeError, load_graph, parse_patch,
                              square_torus)


@pytest.mark.parametrize("spec,nv,ne,npl,nb,full", [
    ("single_plaquette", 4, 4, 1, 4, []),
    ("single_vertex", 5, 4, 0, 4, [0]),
    ("single_vertex:out", 5, 4, 0, 4, [0]),
    ("two_edge", 3, 2, 0, 1, []),
    ("four_qudit_torus", 2, 4, 2, 8, [0, 1]),
    ("two_qudit_sphere", 2, 2, 2, 0, []),
    ("torus:2x2", 4, 8, 4, 16, [0, 1, 2, 3]),
])
def test_patch_counts(spec, nv, ne, npl, nb, full):
    L = parse_patch(spec)
    assert (L.n_vertices, L.n_edges, len(L.plaquettes), len(L.bonds)) == (nv, ne, npl, nb)
    assert L.full_vertices() == full
    assert L.n_qudits == 4 * ne


def test_bonds_join_compatible_corners():
    for spec in ("single_plaquette", "single_vertex", "torus:2x2"):
        for b in parse_patch(spec).bonds:
            assert b.a.l_sign == b.b.l_sign and b.a.z_sign != b.b.z_sign


def test_closed_torus_bonds_every_corner_once():
    L = square_torus(2, 4)
    corners = [c for b in L.bonds for c in (b.a, b.b)]
    assert len(corners) == len(set(corners)) == L.n_qudits
    assert L.linear_size == 2


def test_corner_slot_signs():
    assert [Corner(0, q).l_sign for q in (TL, TR, BR, BL)] == [1, 1, -1, -1]
    assert [Corner(0, q).z_sign for q in (TL, TR, BR, BL)] == [-1, 1, 1, -1]
    assert Corner(3, BR).qudit == 14
    assert CORNER_NAMES[TR] == "TR"


def test_json_roundtrip(tmp_path):
    L = parse_patch("four_qudit_torus")
    p = tmp_path / "t.json"
    L.save(p)
    M = load_graph(p)
    assert M.to_json()["bonds"] == L.to_json()["bonds"]
    assert [pl.cycle for pl in M.plaquettes] == [pl.cycle for pl in L.plaquettes]
    assert parse_patch(f"file:{p}").n_edges == 4


def _graph():
    return {"vertices": [{"id": "a", "sign": -1}, {"id": "b", "sign": 1}, {"id": "c", "sign": -1}],
            "edges": [{"id": "e0", "from": "a", "to": "b"}, {"id": "e1", "from": "c", "to": "b"}],
            "bonds": [{"a": {"edge": "e1", "corner": "TR"}, "b": {"edge": "e0", "corner": "TL"}}]}


def test_load_graph_ids_and_bonds():
    L = load_graph(_graph())
    assert L.edge_ids == ["e0", "e1"] and len(L.bonds) == 1


@pytest.mark.parametrize("mutate,msg", [
    (lambda g: g["vertices"][0].update(sign=2), "sign"),
    (lambda g: g["edges"][0].update({"from": "b", "to": "a"}), "mixed"),
    (lambda g: g["bonds"][0]["b"].update(corner="BL"), "adjacent"),
    (lambda g: g.update(plaquettes=[{"id": "p", "edge_cycle": ["e0", "zz"], "side_signs": [1, -1]}]), "dangling"),
    (lambda g: g["edges"][0].pop("to"), "missing"),
])
def test_load_graph_errors(mutate, msg):
    g = _graph()
    mutate(g)
    with pytest.raises(LatticeError, match=msg):
        load_graph(g)


def test_unknown_patch():
    with pytest.raises(LatticeError, match="unknown"):
        parse_patch("hexagon")
    with pytest.raises(LatticeError, match="even"):
        square_torus(3, 2)


@given(st.integers(1, 3), st.integers(1, 3))
def test_torus_euler_characteristic(a, b):
    L = square_torus(2 * a, 2 * b)
    assert L.n_vertices - L.n_edges + len(L.plaquettes) == 0
    assert len(L.bonds) == 4 * len(L.plaquettes)
