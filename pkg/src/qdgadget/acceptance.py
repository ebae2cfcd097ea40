"""Acceptance suite: ten reproducibility criteria, each a list of numeric checks."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .gadget import (ElementLabel, RepLabel, TheoremViolation, basis_inner_product,
                     expected_ground_energy, make_gadget, overlap_closed_form,
                     overlap_trivial_gauge)
from .groups import make_group, irreps, verify_orthogonality
from .lattice import four_qudit_torus, parse_patch
from .linalg import full_spectrum
from .qd import commutation_relation_error, fourier_conjugacy_error, qd_hamiltonian, t_reconstruction_error
from .perturbation import assemble_model, self_energy
from .perturbation.ed import ed_sweep
from .perturbation.errors import error_scan
from .perturbation.targets import default_targets, fit_effective

GADGET_CASES = (("toric", "Z2"), ("cyclic", "Z2"), ("cyclic", "Z3"), ("cyclic", "Z4"),
                ("general", "S3"), ("general", "D4"))
FIT_CASES = (("Z2", "toric", "full"), ("Z3", "cyclic", "full"), ("S3", "general", "factorized"))
ED_LAMBDAS = tuple(np.linspace(0.02, 0.10, 5))


@dataclass
class Check:
    name: str
    value: float
    tolerance: str
    passed: bool
    informational: bool = False  # reported, not counted toward the verdict


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    budget: float = float("inf")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and not c.informational]

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        n = sum(not c.informational for c in self.checks)
        msg = f"criterion {self.number:2d} {verdict}  {self.title}  [{n - len(self.failures())}/{n} checks, {self.seconds:.1f}s]"
        for c in self.failures():
            msg += f"\n    failed: {c.name} = {c.value:.3e} (want {c.tolerance})"
        return msg

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _le(name, value, tol, informational=False) -> Check:
    value = float(value)
    return Check(name, value, f"<= {tol:g}", bool(value <= tol), informational)


def _ge(name, value, tol, informational=False) -> Check:
    value = float(value)
    return Check(name, value, f">= {tol:g}", bool(value >= tol), informational)


def _eq(name, value, want) -> Check:
    return Check(name, float(value), f"== {want}", bool(value == want))


@lru_cache(maxsize=None)
def _model(group: str, variant: str, patch: str):
    return assemble_model(parse_patch(patch), make_group(group), variant)


@lru_cache(maxsize=None)
def _sigma(group: str, variant: str, patch: str, n: int, mode: str):
    return self_energy(_model(group, variant, patch), n, mode)


# ---------------------------------------------------------------- criteria


def criterion_1() -> list[Check]:
    """Gadget ground energies and degeneracies."""
    out = []
    for variant, g in GADGET_CASES:
        G = make_group(g)
        gad = make_gadget(G, variant)
        spec = gad.spectrum
        deg = int(np.sum(spec < spec[0] + 1e-9))
        E = spec[0] / 2 - 2 if variant == "toric" else spec[0]
        out.append(_le(f"{variant}/{g} |E0 - target|", abs(E - expected_ground_energy(G.order)), 1e-9))
        out.append(_eq(f"{variant}/{g} degeneracy", deg, G.order))
    return out


def criterion_2() -> list[Check]:
    """Stabilizer expectations on every numerically solved ground vector."""
    out = []
    for variant, g in GADGET_CASES:
        gad = make_gadget(make_group(g), variant)
        E0 = gad.spectrum[0]
        vecs = []
        for idx, w, v in gad.block_spectrum:
            for k in np.flatnonzero(w < E0 + 1e-9):
                u = np.zeros(gad.N, complex)
                u[idx] = v[:, k]
                vecs.append(u)
        for name, S in gad.stabilizers().items():
            dev = max(abs(np.vdot(u, S.matrix @ u) - 1) for u in vecs)
            out.append(_le(f"{variant}/{g} max|<{name}> - 1|", dev, 1e-9))
    return out


def toric_amplitude_ratio() -> tuple[float, float]:
    """Project |0000> onto the solved toric ground space; return (large/small ratio,
    deviation from the four-configuration real pattern after phase alignment)."""
    gad = make_gadget(make_group("Z2"), "toric")
    spec = full_spectrum(gad.hamiltonian)
    V = spec.eigenvectors[:, spec.groups() == 0]
    idx = {s: gad.index([int(c) for c in s]) for s in ("0000", "1111", "0110", "1001")}
    v = V @ V[idx["0000"]].conj()
    v = v / v[idx["0000"]]
    big = np.array([v[idx["0000"]], v[idx["1111"]]])
    small = np.array([v[idx["0110"]], v[idx["1001"]]])
    ratio = float(np.mean(np.abs(big)) / np.mean(np.abs(small)))
    pattern = np.zeros(gad.N, complex)
    pattern[[idx["0000"], idx["1111"]]] = 1
    pattern[[idx["0110"], idx["1001"]]] = 1 / ratio
    return ratio, float(np.abs(v - pattern).max())


def criterion_3() -> list[Check]:
    ratio, dev = toric_amplitude_ratio()
    return [_le("|ratio - (1+sqrt2)|", abs(ratio - (1 + np.sqrt(2))), 1e-9),
            _le("max deviation from the four-amplitude pattern", dev, 1e-9)]


def criterion_4() -> list[Check]:
    out = []
    for g in ("Z2", "Z3", "Z4", "Z5", "S3", "D4", "Q8"):
        t = irreps(make_group(g))
        out.append(_le(f"{g} grand orthogonality", verify_orthogonality(t), 1e-12))
        out.append(_le(f"{g} T from Z", t_reconstruction_error(t), 1e-12))
        out.append(_le(f"{g} L/T commutation", commutation_relation_error(t.group), 1e-12))
    for d in (2, 3, 4, 5, 6):
        out.append(_le(f"Z{d} Fourier conjugacy", fourier_conjugacy_error(d), 1e-12))
    return out


def criterion_5() -> list[Check]:
    out = []
    for g, want in (("Z2", 4), ("Z3", 9), ("S3", 8)):
        qd = qd_hamiltonian(four_qudit_torus(), make_group(g))
        out.append(_eq(f"{g} torus ground degeneracy", full_spectrum(qd.hamiltonian).degeneracy(0), want))
    return out


def random_overlap_labels(group, n: int, seed: int = 0):
    """Random (RepLabel, ElementLabel) pairs; half share (h, k_L, sigma) so the
    delta structure is exercised on both branches."""
    rng = np.random.default_rng(seed)
    t = irreps(group)
    pick = lambda: int(rng.integers(len(t)))
    out = []
    for k in range(n):
        s, p, s2 = pick(), pick(), pick()
        h, kl = int(rng.integers(group.order)), int(rng.integers(group.order))
        rep = RepLabel(s, int(rng.integers(t[s].dim)), int(rng.integers(t[s].dim)), h,
                       p, int(rng.integers(t[p].dim)), int(rng.integers(t[p].dim)), kl)
        if k % 2:
            el = ElementLabel(s2, int(rng.integers(t[s2].dim)), int(rng.integers(t[s2].dim)),
                              int(rng.integers(group.order)), int(rng.integers(group.order)),
                              int(rng.integers(group.order)))
        else:
            el = ElementLabel(s, rep.m, rep.n, h, int(rng.integers(group.order)), kl)
        out.append((rep, el))
    return out


def criterion_6(n: int = 60, seed: int = 0) -> list[Check]:
    G = make_group("S3")
    t = irreps(G)
    triv = next(i for i, r in enumerate(t) if r.dim == 1 and np.allclose(r.matrices[:, 0, 0], 1))
    err = 0.0
    for rep, el in random_overlap_labels(G, n, seed):
        err = max(err, abs(basis_inner_product(rep, el, G) - overlap_closed_form(rep, el, G)))
    # trivial gauge irrep: 1/sqrt|G| for every k_G when the sigma labels coincide
    err_triv, n_triv = 0.0, 0
    for rep, el in random_overlap_labels(G, n, seed + 1):
        rep = RepLabel(rep.sigma, rep.m, rep.n, rep.h, triv, 0, 0, rep.k_L)
        err_triv = max(err_triv, abs(basis_inner_product(rep, el, G) - overlap_trivial_gauge(rep, el, G)))
        n_triv += 1
    return [_ge("random label tuples", n + n_triv, 50),
            _le("max |numeric - closed form|", err, 1e-9),
            _le("max |numeric - 1/sqrt|G| delta|", err_triv, 1e-9)]


def criterion_7() -> list[Check]:
    out = []
    for g in ("Z2", "Z3", "S3"):
        rep = error_scan(make_group(g), "general", strict=False)
        van = [t.norm for t in rep.tuples if t.predicted_vanishing]
        sur = [t.norm for t in rep.tuples if t.predicted_vanishing is False]
        out.append(_eq(f"{g} mismatched tuples", len(rep.mismatches()), 0))
        out.append(_le(f"{g} max vanishing norm", max(van), 1e-12))
        out.append(_ge(f"{g} min surviving norm", min(sur), 1e-3))
        out.append(_le(f"{g} averaged-form error", rep.averaged_form_error, 1e-10))
    return out


def criterion_8() -> list[Check]:
    out = []
    for g, variant, mode in FIT_CASES:
        for patch, kind in (("single_vertex", "A"), ("single_plaquette", "B")):
            m = _model(g, variant, patch)
            se = _sigma(g, variant, patch, 4, mode)
            fit = fit_effective(se, default_targets(m))
            c = fit.c_A if kind == "A" else fit.c_B
            tag = f"{g} {patch} ({mode})"
            out.append(_le(f"{tag} fit residual", fit.relative_residual, 1e-8))
            out.append(_ge(f"{tag} c_{kind}", c, 1e-12))
            if mode == "full":
                fac = _sigma(g, variant, patch, 4, "factorized").coefficient
                rel = np.abs(fac - se.coefficient).max() / np.abs(se.coefficient).max()
                out.append(_le(f"{tag} full vs factorized", rel, 1e-8))
            if kind == "B" and not m.group.is_abelian:
                ext = fit_effective(se, default_targets(m, centralizer=True))
                out.append(_le(f"{tag} residual with centralizer target", ext.relative_residual, 1e-8,
                               informational=True))
    return out


def criterion_9() -> list[Check]:
    m = _model("Z2", "toric", "single_plaquette")
    sig = {n: _sigma("Z2", "toric", "single_plaquette", n, "brute") for n in (2, 4)}
    tab = ed_sweep(m, ED_LAMBDAS, sigma=sig)
    errs = [r.error for r in tab.rows if r.error]
    rs = tab.residual_slopes()
    return [_eq("failed sweep points", len(errs), 0),
            _le("|splitting exponent - 4|", abs(tab.fit_slope() - 4), 0.1),
            _ge("min local log-slope of ED - effective residual", min(rs) if rs else float("nan"), 4.9)]


def criterion_10() -> list[Check]:
    out = []
    s1 = _sigma("Z2", "toric", "two_edge", 1, "brute")
    out.append(_le("toric Sigma1 nontrivial part", s1.nontrivial_norm(), 1e-10))
    for g, variant in (("Z2", "toric"), ("Z3", "cyclic"), ("S3", "general")):
        # the S3 direct cross-check takes ~30 s and lives in the unit tests
        for mode in ("factorized", "direct") if g != "S3" else ("factorized",):
            s2 = _sigma(g, variant, "two_edge", 2, mode)
            rel = s2.nontrivial_norm() / max(1.0, abs(s2.trivial_part()))
            out.append(_le(f"{variant}/{g} Sigma2 deviation from identity ({mode})", rel, 1e-10))
    for mode in ("factorized", "direct"):
        s3 = _sigma("Z3", "cyclic", "two_edge", 3, mode)
        scale = max(1.0, np.abs(s3.coefficient).max())
        out.append(_le(f"cyclic/Z3 Sigma3 nontrivial part ({mode})", s3.nontrivial_norm() / scale, 1e-10))
    return out


CRITERIA = {
    1: ("gadget ground energies and degeneracy", criterion_1, 10),
    2: ("ground space stabilization", criterion_2, 30),
    3: ("toric encoded amplitude pattern", criterion_3, 1),
    4: ("representation identities", criterion_4, 30),
    5: ("quantum double torus degeneracies", criterion_5, 30),
    6: ("basis overlaps", criterion_6, 30),
    7: ("two-corner error scans", criterion_7, 120),
    8: ("fourth-order vertex and plaquette structure", criterion_8, 600),
    9: ("exact diagonalization scaling", criterion_9, 900),
    10: ("odd and trivial orders", criterion_10, 30),
}


def run_criterion(k: int) -> CriterionResult:
    title, fn, budget = CRITERIA[k]
    t = time.perf_counter()
    try:
        checks = fn()
    except (TheoremViolation, RuntimeError, ValueError, MemoryError) as exc:
        checks = [Check(f"raised {type(exc).__name__}: {exc}", float("nan"), "no exception", False)]
    res = CriterionResult(k, title, checks, time.perf_counter() - t, budget)
    res.checks.append(_le("runtime seconds", res.seconds, budget))
    return res


def run_all(select=None) -> list[CriterionResult]:
    return [run_criterion(k) for k in (select or CRITERIA)]
