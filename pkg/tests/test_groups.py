import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdgadget.groups import (FiniteGroup, GroupAxiomError, Irrep, IrrepTable, IrrepTableError, builtin, cyclic,
                             irreps, make_group, register_irreps, validate_irreps, verify_orthogonality)

ALL = ["Z2", "Z3", "Z4", "Z5", "Z6", "S3", "D4", "Q8"]


@pytest.mark.parametrize("name", ALL)
def test_table_is_complete_and_orthogonal(name):
    G = make_group(name)
    t = irreps(G)
    assert sum(d * d for d in t.dims) == G.order
    assert len(t) == len(G.conjugacy_classes)
    assert verify_orthogonality(t) < 1e-12


@pytest.mark.parametrize("name,order,abelian,nclasses", [("S3", 6, False, 3), ("D4", 8, False, 5),
                                                         ("Q8", 8, False, 5), ("Z4", 4, True, 4)])
def test_builtin_shapes(name, order, abelian, nclasses):
    G = make_group(name)
    assert G.order == order and G.is_abelian == abelian and len(G.conjugacy_classes) == nclasses


def test_q8_and_d4_are_distinguished_by_element_orders():
    orders = lambda G: sorted(G.element_order(g) for g in G.elements)
    assert orders(builtin("D4")) == [1, 2, 2, 2, 2, 2, 4, 4]
    assert orders(builtin("Q8")) == [1, 2, 4, 4, 4, 4, 4, 4]


def test_make_group_spellings(tmp_path):
    assert make_group(3).order == 3
    assert make_group("cyclic(5)").order == 5
    assert make_group("z2").order == 2
    p = tmp_path / "z3.json"
    p.write_text(json.dumps({"order": 3, "mult": cyclic(3).mult.tolist(), "name": "Z3"}))
    G = make_group(str(p))
    assert G.order == 3 and np.array_equal(G.mult, cyclic(3).mult)
    with pytest.raises(ValueError, match="unknown builtin"):
        make_group("A5")


@pytest.mark.parametrize("table,axiom", [
    ([[0, 1], [1, 1]], "inverse"),
    ([[1, 0], [0, 1]], "identity"),
    ([[0, 1, 2], [1, 2, 0]], "closure"),
    ([[0, 1, 2], [1, 0, 3], [2, 3, 0]], "closure"),
])
def test_axiom_violations_named(table, axiom):
    with pytest.raises(GroupAxiomError, match=axiom):
        FiniteGroup(np.array(table))


def test_associativity_violation():
    # a Latin square with identity 0 that is not associative (order-5 loop)
    m = np.array([[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]])
    with pytest.raises(GroupAxiomError, match="associativity"):
        FiniteGroup(m)


def test_bad_irrep_table_rejected():
    G = builtin("S3")
    t = irreps(G)
    with pytest.raises(IrrepTableError, match="incomplete"):
        validate_irreps(IrrepTable(G, t.irreps[:2]))
    broken = t[2].matrices.copy()
    broken[1] = broken[1] @ np.diag([1, -1])
    with pytest.raises(IrrepTableError):
        validate_irreps(IrrepTable(G, t.irreps[:2] + (Irrep("E", broken),)))
    with pytest.raises(IrrepTableError):
        register_irreps(IrrepTable(G, t.irreps[:2]))


def test_non_abelian_without_table():
    s3 = builtin("S3")
    G = FiniteGroup(s3.mult.copy(), name="anon")
    with pytest.raises(IrrepTableError, match="no irrep table"):
        irreps(G)


def test_abelian_non_cyclic_characters():
    # Z2 x Z2 via XOR
    a = np.arange(4)
    G = FiniteGroup(a[:, None] ^ a[None, :], name="V4")
    t = irreps(G)
    assert len(t) == 4 and verify_orthogonality(t) < 1e-12


@pytest.mark.parametrize("name", ["S3", "D4", "Q8"])
def test_table_hash_stable(name):
    assert builtin(name).table_hash() == builtin(name).table_hash()
    assert irreps(builtin(name)).table_hash() == irreps(builtin(name)).table_hash()


group_names = st.sampled_from(ALL)


@given(group_names, st.data())
def test_homomorphism_property(name, data):
    G = make_group(name)
    a = data.draw(st.integers(0, G.order - 1))
    b = data.draw(st.integers(0, G.order - 1))
    for r in irreps(G):
        assert np.allclose(r(a) @ r(b), r(G.mul(a, b)), atol=1e-12)
        assert np.allclose(r(G.inv(a)), r(a).conj().T, atol=1e-12)


@given(group_names, st.data())
def test_conjugation_and_inverse(name, data):
    G = make_group(name)
    g, h = (data.draw(st.integers(0, G.order - 1)) for _ in range(2))
    assert G.mul(g, G.inv(g)) == G.identity
    assert G.mul(G.conj(g, h), g) == G.mul(g, h)
    cls = next(c for c in G.conjugacy_classes if h in c)
    assert G.conj(g, h) in cls


@given(group_names)
def test_character_row_orthogonality(name):
    G = make_group(name)
    chars = np.array([r.character for r in irreps(G)])
    assert np.allclose(chars.conj() @ chars.T / G.order, np.eye(len(chars)), atol=1e-12)
