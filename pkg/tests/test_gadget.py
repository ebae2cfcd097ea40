import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdgadget.acceptance import random_overlap_labels, toric_amplitude_ratio
from qdgadget.gadget import (ElementLabel, GadgetHamiltonianSpec, PhysicalLabel, RepLabel, basis_inner_product,
                             classify_action, expected_ground_energy, gadget_hamiltonian, ground_space,
                             logical_action, make_gadget, overlap_closed_form, overlap_trivial_flux,
                             overlap_trivial_gauge)
from qdgadget.groups import irreps, make_group

CASES = [("toric", "Z2"), ("cyclic", "Z2"), ("cyclic", "Z3"), ("cyclic", "Z4"), ("cyclic", "Z5"),
         ("general", "Z2"), ("general", "Z3"), ("general", "S3"), ("general", "D4"), ("general", "Q8")]


@pytest.mark.parametrize("variant,name", CASES)
def test_ground_space(variant, name):
    G = make_group(name)
    gs = ground_space(GadgetHamiltonianSpec(variant), G)
    E = gs.shift_adjusted_energy()
    assert abs(E - expected_ground_energy(G.order)) < 1e-9
    assert gs.degeneracy == G.order and gs.gap > 0.1
    assert gs.projector_error < 1e-10
    P = gs.projector.dense()
    H = gadget_hamiltonian(GadgetHamiltonianSpec(variant), G).dense()
    assert np.allclose(H @ P, gs.energy * P, atol=1e-9)


@pytest.mark.parametrize("variant,name", CASES)
def test_logical_operators_preserve_ground_space(variant, name):
    G = make_group(name)
    gad = make_gadget(G, variant)
    gs = gad.ground_space()
    P = gs.projector.matrix
    for op in gad.logical_operators():
        m = op.matrix
        leak = abs(m @ P - P @ m @ P)
        assert (leak.max() if leak.nnz else 0) < 1e-10
        assert classify_action(logical_action(op, gs)) in ("logical", "scalar")


def test_general_logical_actions_are_regular_representation():
    G = make_group("S3")
    gad = make_gadget(G, "general")
    gs = gad.ground_space()
    for g in G.elements:
        Lp = logical_action(gad.operator("L_L+", g=g), gs)
        want = np.zeros((6, 6))
        want[G.mult[g], np.arange(6)] = 1
        assert np.allclose(Lp, want, atol=1e-10)
        T = logical_action(gad.operator("T_L+", g=g), gs)
        assert np.allclose(T, np.diag(np.arange(6) == g), atol=1e-10)
        # gauge operators act trivially
        assert classify_action(logical_action(gad.operator("L_G+", g=g), gs)) in ("scalar", "zero")


def test_toric_amplitude_pattern():
    ratio, dev = toric_amplitude_ratio()
    assert abs(ratio - (1 + np.sqrt(2))) < 1e-9 and dev < 1e-9


def test_couplings_change_energy_not_degeneracy():
    G = make_group("S3")
    gs = ground_space(GadgetHamiltonianSpec("general", 2.0, 0.5), G)
    assert gs.degeneracy == 6
    assert not np.isclose(gs.energy, expected_ground_energy(6))


def test_variant_validation():
    with pytest.raises(ValueError, match="toric"):
        make_gadget(make_group("Z3"), "toric")
    with pytest.raises(ValueError, match="cyclic"):
        make_gadget(make_group("S3"), "cyclic")
    with pytest.raises(ValueError, match="variant"):
        GadgetHamiltonianSpec("hex")
    with pytest.raises(ValueError, match="positive"):
        GadgetHamiltonianSpec("general", -1.0)
    g = make_gadget(make_group("S3"))
    with pytest.raises(ValueError, match="not a general"):
        g.operator("X_L")
    with pytest.raises(ValueError, match="invalid group element"):
        g.operator("L_L+", g=9)
    with pytest.raises(ValueError, match="irrep"):
        g.operator("Z_L+")


def test_classify_action():
    assert classify_action(np.zeros((2, 2))) == "zero"
    assert classify_action(3 * np.eye(2)) == "scalar"
    assert classify_action(np.diag([1, -1])) == "logical"


@pytest.mark.parametrize("name", ["S3", "D4"])
def test_overlaps_closed_form(name):
    G = make_group(name)
    for rep, el in random_overlap_labels(G, 40, seed=3):
        assert abs(basis_inner_product(rep, el, G) - overlap_closed_form(rep, el, G)) < 1e-9


def test_overlap_special_cases():
    G = make_group("S3")
    t = irreps(G)
    triv = 0
    assert t[triv].dim == 1
    for kg in G.elements:
        rep = RepLabel(2, 0, 1, 0, triv, 0, 0, 3)
        el = ElementLabel(2, 0, 1, 0, kg, 3)
        assert np.isclose(basis_inner_product(rep, el, G), 1 / np.sqrt(6))
        assert np.isclose(overlap_trivial_gauge(rep, el, G), 1 / np.sqrt(6))
        rep = RepLabel(triv, 0, 0, 0, 2, 1, 0, 4)
        el = ElementLabel(2, 1, 0, 0, kg, 4)
        assert np.isclose(basis_inner_product(rep, el, G), overlap_trivial_flux(rep, el, G))


@given(st.sampled_from(["Z3", "S3"]), st.data())
def test_physical_basis_orthonormal(name, data):
    G = make_group(name)
    draw = lambda: data.draw(st.integers(0, G.order - 1))
    a = PhysicalLabel(draw(), draw(), draw(), draw())
    b = PhysicalLabel(draw(), draw(), draw(), draw())
    assert np.isclose(basis_inner_product(a, b, G), float(a == b))


@pytest.mark.parametrize("name", ["Z3", "S3"])
def test_element_basis_orthonormal(name):
    G = make_group(name)
    t = irreps(G)
    labs = [ElementLabel(s, m, n, h, 1, 2) for s, m, n in t.entries() for h in (0, 1)]
    M = np.array([[basis_inner_product(a, b, G) for b in labs] for a in labs])
    assert np.allclose(M, np.eye(len(labs)), atol=1e-12)
