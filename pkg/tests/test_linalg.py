import csv

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from qdgadget.linalg import (ConvergenceError, Operator, SiteSpace, block_compress, check_isometry,
                             connected_blocks, embed, full_spectrum, identity, kron_all, lowest_eigenpairs,
                             orth, spectral_projector)

dims = st.lists(st.integers(1, 4), min_size=1, max_size=4)


@given(dims, st.data())
def test_index_digits_roundtrip(ds, data):
    sp_ = SiteSpace(tuple(ds))
    cfg = [data.draw(st.integers(0, d - 1)) for d in ds]
    i = sp_.index(cfg)
    assert 0 <= i < sp_.total_dim
    assert list(sp_.digits(i)) == cfg


def test_little_endian_first_site_fastest():
    s = SiteSpace((2, 3))
    assert s.index([1, 0]) == 1 and s.index([0, 1]) == 2


@given(st.lists(st.integers(2, 3), min_size=2, max_size=3), st.data())
def test_embed_matches_kron(ds, data):
    space = SiteSpace(tuple(ds))
    rng = np.random.default_rng(data.draw(st.integers(0, 100)))
    site = data.draw(st.integers(0, len(ds) - 1))
    A = rng.normal(size=(ds[site],) * 2)
    mats = [A if k == site else np.eye(d) for k, d in enumerate(ds)]
    assert np.allclose(embed(A, [site], space).dense(), kron_all(mats))


def test_embed_two_sites_out_of_order():
    space = SiteSpace((2, 3, 2))
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    # local index: first listed site fastest
    AB = np.kron(B, A)  # A on site 2 (fast), B on site 0
    got = embed(AB, [2, 0], space).dense()
    assert np.allclose(got, kron_all([B, np.eye(3), A]))


def test_embed_errors():
    space = SiteSpace((2, 2))
    with pytest.raises(ValueError, match="distinct"):
        embed(np.eye(4), [0, 0], space)
    with pytest.raises(ValueError, match="out of range"):
        embed(np.eye(2), [3], space)
    with pytest.raises(ValueError, match="does not match"):
        embed(np.eye(3), [0], space)


def test_operator_algebra_and_hermitian_flag():
    space = SiteSpace((2,))
    X = Operator(space, np.array([[0, 1], [1, 0]]), hermitian=True)
    with pytest.raises(ValueError, match="hermitian"):
        Operator(space, np.array([[0, 1], [0, 0]]), hermitian=True)
    assert np.allclose((X @ X).dense(), np.eye(2))
    assert np.allclose((2 * X - X).dense(), X.dense())
    assert (X * 1j).hermitian is False
    assert X.commutator_norm(identity(space)) == 0
    with pytest.raises(ValueError, match="shape"):
        Operator(space, np.eye(3))


def _random_herm(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_lanczos_agrees_with_dense():
    h = sp.random(600, 600, density=0.02, random_state=3) + 0j
    h = (h + h.getH()) / 2
    dense = lowest_eigenpairs(h, 4, dense_cutoff=10_000)
    it = lowest_eigenpairs(h, 4, dense_cutoff=100, seed=7)
    assert np.allclose(dense.eigenvalues, it.eigenvalues, atol=1e-9)


def test_eigen_errors():
    with pytest.raises(ValueError, match="Hermitian"):
        lowest_eigenpairs(np.array([[0, 1], [0, 0]]), 1)
    with pytest.raises(ValueError, match="exceeds"):
        lowest_eigenpairs(np.eye(2), 3)
    assert issubclass(ConvergenceError, RuntimeError)


def test_degeneracy_and_gap():
    s = full_spectrum(np.diag([0.0, 0.0, 1e-11, 2.0, 3.0]))
    assert s.degeneracy(0) == 3 and np.isclose(s.gap(), 2.0)


def test_spectral_projector_band_checks():
    h = _random_herm(6, 0)
    s = full_spectrum(h)
    lo = s.eigenvalues[2]
    with pytest.raises(ValueError, match="degeneracy tolerance"):
        spectral_projector(s, (lo, np.inf))
    P = spectral_projector(s, (-np.inf, (s.eigenvalues[1] + s.eigenvalues[2]) / 2))
    m = P.dense()
    assert np.allclose(m @ m, m) and np.isclose(np.trace(m).real, 2)


def test_isometry_and_compress():
    V = orth(np.random.default_rng(0).normal(size=(5, 2)))
    check_isometry(V)
    with pytest.raises(ValueError, match="orthonormal"):
        check_isometry(2 * V)
    H = _random_herm(5, 1)
    assert np.allclose(block_compress(H, V), V.conj().T @ H @ V)


def test_connected_blocks():
    m = sp.block_diag([np.ones((2, 2)), np.ones((3, 3))])
    n, lab = connected_blocks(m)
    assert n == 2 and len(set(lab[:2])) == 1 and lab[0] != lab[2]


def test_spectrum_csv_sorted(tmp_path):
    s = full_spectrum(_random_herm(5, 2))
    p = tmp_path / "s.csv"
    s.to_csv(p)
    rows = list(csv.DictReader(open(p)))
    ev = [float(r["eigenvalue"]) for r in rows]
    assert ev == sorted(ev) and len(ev) == 5
