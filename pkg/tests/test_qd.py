import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdgadget.groups import irreps, make_group
from qdgadget.lattice import four_qudit_torus, square_torus, two_qudit_sphere
from qdgadget.linalg import full_spectrum
from qdgadget.qd import (EdgeOp, L_minus, L_plus, T_from_Z, T_op, Z_op, commutation_relation_error, cyclic_L,
                         cyclic_Z, fourier_conjugacy_error, local_matrix, plaquette_indicator, qd_hamiltonian,
                         t_reconstruction_error, vertex_local)

GROUPS = ["Z2", "Z3", "Z4", "S3", "D4", "Q8"]


@pytest.mark.parametrize("name", GROUPS)
def test_edge_operator_identities(name):
    G = make_group(name)
    t = irreps(G)
    assert commutation_relation_error(G) < 1e-12
    assert t_reconstruction_error(t) < 1e-12
    for g in G.elements:
        # L_+ and L_- are commuting left/right regular actions
        for h in G.elements:
            assert np.array_equal(L_plus(G, g) @ L_minus(G, h), L_minus(G, h) @ L_plus(G, g))
        assert np.allclose(L_plus(G, g) @ L_plus(G, G.inv(g)), np.eye(G.order))


@given(st.sampled_from(GROUPS), st.data())
def test_Z_is_representation_valued(name, data):
    """sum_k Z^{pi_ik} Z^{pi_kj} evaluated on a product is pi(a)pi(b) = pi(ab)."""
    G = make_group(name)
    t = irreps(G)
    p = data.draw(st.integers(0, len(t) - 1))
    d = t[p].dim
    Zs = np.array([[np.diag(Z_op(t, p, i, j, 1)) for j in range(d)] for i in range(d)])  # (d, d, |G|)
    a, b = data.draw(st.integers(0, G.order - 1)), data.draw(st.integers(0, G.order - 1))
    prod = Zs[:, :, a] @ Zs[:, :, b]
    assert np.allclose(prod, t[p](G.mul(a, b)))


def test_T_from_Z_sign_conventions():
    t = irreps(make_group("S3"))
    for g in t.group.elements:
        for s in (1, -1):
            assert np.allclose(T_from_Z(t, g, s), T_op(t.group, g, s))


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_fourier(d):
    assert fourier_conjugacy_error(d) < 1e-12
    L, Z = cyclic_L(d), cyclic_Z(d)
    w = np.exp(2j * np.pi / d)
    assert np.allclose(Z @ L, w * L @ Z)


def test_edge_op_validation():
    G = make_group("Z3")
    with pytest.raises(ValueError):
        EdgeOp("X", 1)
    with pytest.raises(ValueError):
        EdgeOp("L", 2, g=1)
    with pytest.raises(ValueError, match="invalid group element"):
        local_matrix(EdgeOp("L", 1, g=5), G)
    with pytest.raises(ValueError, match="invalid irrep"):
        local_matrix(EdgeOp("Z", 1, irrep=9), G)
    with pytest.raises(ValueError, match="out of range"):
        Z_op(irreps(G), 0, 1, 0, 1)


def test_plaquette_indicator_orderings():
    G = make_group("S3")
    cfg = np.array([[1, 3], [3, 1]])
    # forward, forward: g2 g1 == 1?
    got = plaquette_indicator(G, [True, True], cfg)
    want = [float(G.mul(3, 1) == 0), float(G.mul(1, 3) == 0)]
    assert list(got) == want
    back = plaquette_indicator(G, [True, False], np.array([[2, 2]]))
    assert back[0] == 1.0


@pytest.mark.parametrize("name", ["Z2", "S3"])
def test_vertex_projector_is_projector(name):
    G = make_group(name)
    A = vertex_local(G, [1, -1, 1]).toarray()
    assert np.allclose(A @ A, A) and np.allclose(A, A.conj().T)


@pytest.mark.parametrize("name,deg", [("Z2", 4), ("Z3", 9), ("S3", 8)])
def test_torus_degeneracy(name, deg):
    model = qd_hamiltonian(four_qudit_torus(), make_group(name))
    assert model.projector_errors() < 1e-12 and model.commutator_error() < 1e-12
    assert full_spectrum(model.hamiltonian).degeneracy(0) == deg


def test_sphere_is_unique():
    model = qd_hamiltonian(two_qudit_sphere(), make_group("S3"))
    s = full_spectrum(model.hamiltonian)
    assert s.degeneracy(0) == 1 and np.isclose(s.eigenvalues[0], -4)


def test_larger_torus_z2_lanczos():
    from qdgadget.linalg import lowest_eigenpairs

    model = qd_hamiltonian(square_torus(2, 2), make_group("Z2"))
    s = lowest_eigenpairs(model.hamiltonian, 6, dense_cutoff=100)
    assert s.degeneracy(0) == 4
