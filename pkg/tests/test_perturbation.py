import numpy as np
import pytest

from qdgadget.acceptance import _model, _sigma
from qdgadget.groups import make_group
from qdgadget.lattice import parse_patch
from qdgadget.perturbation import MemoryGuardError, assemble_model, bond_local, bond_term, self_energy
from qdgadget.perturbation.ed import ed_sweep
from qdgadget.perturbation.errors import error_scan
from qdgadget.perturbation.targets import (default_targets, encoded_centralizer, encoded_plaquette,
                                           encoded_vertex, fit_effective, plaquette_holonomy)


def _rel(a, b):
    return np.abs(a - b).max() / max(1.0, np.abs(b).max())


def dense_sigma(model, n):
    """Textbook Upsilon V (G0 V)^(n-1) Upsilon compressed onto the logical basis."""
    V = model.V.dense()
    G0 = model.green_dense()
    M = V
    for _ in range(n - 1):
        M = M @ G0 @ V
    return model.compress(M)


@pytest.mark.parametrize("variant", ["toric", "cyclic", "general"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_two_edge_orders_against_textbook(variant, n):
    m = assemble_model(parse_patch("two_edge"), make_group("Z2"), variant)
    want = dense_sigma(m, n)
    for mode in ("factorized", "brute", "direct", "full"):
        assert _rel(self_energy(m, n, mode).coefficient, want) < 1e-10, mode


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_z3_two_edge_modes_agree(n):
    m = _model("Z3", "cyclic", "two_edge")
    ref = self_energy(m, n, "brute").coefficient
    for mode in ("factorized", "direct", "full"):
        assert _rel(self_energy(m, n, mode).coefficient, ref) < 1e-10, mode


@pytest.mark.parametrize("n", [2, 4])
def test_toric_plaquette_modes_agree(n):
    m = _model("Z2", "toric", "single_plaquette")
    ref = _sigma("Z2", "toric", "single_plaquette", n, "brute").coefficient
    for mode in ("factorized", "full", "direct"):
        assert _rel(_sigma("Z2", "toric", "single_plaquette", n, mode).coefficient, ref) < 1e-10, mode
    assert m.logical_dim == 16


@pytest.mark.slow
def test_s3_two_edge_factorized_vs_direct():
    m = assemble_model(parse_patch("two_edge"), make_group("S3"), "general")
    for n in (2, 3):
        a = self_energy(m, n, "factorized").coefficient
        b = self_energy(m, n, "direct").coefficient
        assert _rel(a, b) < 1e-10


def test_self_energy_hermitian_and_trivial_low_orders():
    for n in (1, 2, 3):
        se = _sigma("Z3", "cyclic", "single_vertex", n, "factorized")
        assert se.hermiticity_error() < 1e-10
        assert se.nontrivial_norm() < 1e-10 * max(1, abs(se.trivial_part()))
    assert _sigma("Z2", "toric", "two_edge", 1, "brute").nontrivial_norm() < 1e-12


def test_fourth_order_fits_abelian():
    for g, variant in (("Z2", "toric"), ("Z3", "cyclic")):
        for patch, key in (("single_vertex", "c_A"), ("single_plaquette", "c_B")):
            m = _model(g, variant, patch)
            fit = fit_effective(_sigma(g, variant, patch, 4, "factorized"), default_targets(m))
            assert fit.relative_residual < 1e-10 and getattr(fit, key) > 0
    # vertex and plaquette couplings coincide for these self-dual setups
    cA = fit_effective(_sigma("Z2", "toric", "single_vertex", 4, "factorized"),
                       default_targets(_model("Z2", "toric", "single_vertex"))).c_A
    cB = fit_effective(_sigma("Z2", "toric", "single_plaquette", 4, "factorized"),
                       default_targets(_model("Z2", "toric", "single_plaquette"))).c_B
    assert np.isclose(cA, cB, rtol=1e-10)


@pytest.mark.slow
def test_s3_plaquette_needs_centralizer_term():
    """The non-abelian fourth-order plaquette leaves a |C_G(holonomy)| diagonal on top of B."""
    mp = _model("S3", "general", "single_plaquette")
    se = _sigma("S3", "general", "single_plaquette", 4, "factorized")
    plain = fit_effective(se, default_targets(mp))
    ext = fit_effective(se, default_targets(mp, centralizer=True))
    assert plain.relative_residual > 1e-5
    assert ext.relative_residual < 1e-12 and ext.c_B > 0 and ext.meta["c_C"] > 0
    # Sigma4 is diagonal and a class function of the holonomy
    c = se.coefficient
    assert np.abs(c - np.diag(np.diag(c))).max() < 1e-9
    hol = plaquette_holonomy(mp, 0)
    for cls in mp.group.conjugacy_classes:
        vals = np.diag(c).real[np.isin(hol, cls)]
        assert np.ptp(vals) < 1e-8 * np.abs(vals).max()
    mv = _model("S3", "general", "single_vertex")
    cA = fit_effective(_sigma("S3", "general", "single_vertex", 4, "factorized"), default_targets(mv)).c_A
    assert np.isclose(ext.c_B, cA, rtol=1e-9)


def test_centralizer_target_trivial_for_abelian():
    m = _model("Z3", "cyclic", "single_plaquette")
    assert np.allclose(encoded_centralizer(m, 0), np.eye(m.logical_dim))
    assert "C(0)" not in default_targets(m, centralizer=True)


def test_encoded_targets_are_commuting_projectors():
    m = _model("S3", "general", "single_vertex")
    A = encoded_vertex(m, 0)
    assert np.allclose(A @ A, A) and np.allclose(A, A.conj().T)
    mp = _model("S3", "general", "single_plaquette")
    B = encoded_plaquette(mp, 0)
    assert np.allclose(B @ B, B) and np.isclose(np.trace(B).real, 6 ** 3)


def test_rank_deficient_targets():
    m = _model("Z2", "toric", "single_plaquette")
    se = _sigma("Z2", "toric", "single_plaquette", 4, "factorized")
    B = encoded_plaquette(m, 0)
    with pytest.raises(ValueError, match="rank"):
        fit_effective(se, {"B(0)": B, "B'(0)": 2 * B})


def test_bond_operator_hermitian():
    for g, v in (("Z2", "toric"), ("Z3", "cyclic"), ("S3", "general")):
        lat = parse_patch("two_edge")
        b = lat.bonds[0]
        h = bond_local(make_group(g), v, b.a.slot, b.b.slot)
        assert np.allclose(h, h.conj().T)
        assert bond_term(b, make_group(g), v).is_hermitian()


def test_guards_and_validation():
    m = assemble_model(parse_patch("torus:2x2"), make_group("S3"), "general")
    with pytest.raises(MemoryGuardError):
        self_energy(m, 2)
    with pytest.raises(MemoryGuardError):
        m.H0
    small = _model("Z2", "toric", "two_edge")
    with pytest.raises(ValueError, match="mode"):
        self_energy(small, 2, "magic")
    with pytest.raises(ValueError, match="n <= 4"):
        self_energy(small, 5, "brute")
    with pytest.raises(ValueError, match=">= 1"):
        self_energy(small, 0)
    with pytest.raises(ValueError, match="lambda"):
        assemble_model(parse_patch("two_edge"), make_group("Z2"), "toric", lam=-1)


def test_factorized_higher_order_runs():
    se = self_energy(_model("Z2", "toric", "single_plaquette"), 6, "factorized")
    assert se.hermiticity_error() < 1e-9


@pytest.mark.parametrize("name", ["Z2", "Z3", "S3"])
def test_error_scans(name):
    rep = error_scan(make_group(name), "general")
    assert rep.passed and not rep.mismatches()
    classes = rep.by_class()
    assert {"z_a", "z_b", "z_c", "z_d", "l_a", "l_b", "l_c", "l_d", "mixed"} <= set(classes)
    assert sum(d["vanishing"] for d in classes.values()) > 0
    assert sum(d["surviving"] for d in classes.values()) > 0


def test_ed_sweep_outputs(tmp_path):
    m = _model("Z2", "toric", "single_plaquette")
    sig = {n: _sigma("Z2", "toric", "single_plaquette", n, "brute") for n in (2, 4)}
    tab = ed_sweep(m, [0.03, 0.05, 0.08], sigma=sig)
    assert all(r.error is None for r in tab.rows)
    assert abs(tab.fit_slope() - 4) < 0.1
    assert min(tab.residual_slopes()) > 4.9
    tab.to_csv(tmp_path / "s.csv")
    tab.plotdata(tmp_path / "s.dat")
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 4
    assert len((tmp_path / "s.dat").read_text().splitlines()) == 4
