"""Encoded vertex / plaquette operators and the fit of Sigma^(4) onto them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gadget import logical_action, make_gadget
from ..linalg import kron_all
from ..qd import plaquette_indicator
from .model import PerturbedModel
from .selfenergy import SelfEnergy


def _edge_logical(model: PerturbedModel, name: str, g: int) -> np.ndarray:
    gen = make_gadget(model.group, "general")
    return logical_action(gen.operator(name, g=g), model.ground)


def encoded_vertex(model: PerturbedModel, v: int) -> np.ndarray:
    """(1/|G|) sum_g (x)_{e in star(v)} L_L(e, v)^g: L_L+ where v is the head, L_L- where it is the tail."""
    lat, G, K = model.lattice, model.group, model.d
    star = lat.star(v)
    if not star:
        raise ValueError(f"vertex {v} has no edges")
    out = np.zeros((model.logical_dim,) * 2, complex)
    for g in G.elements:
        mats = []
        for e in range(model.n_edges):
            if e not in star:
                mats.append(np.eye(K))
            else:
                mats.append(_edge_logical(model, "L_L+" if lat.edges[e].head == v else "L_L-", g))
        out += kron_all(mats)
    return out / G.order


def encoded_plaquette(model: PerturbedModel, p: int) -> np.ndarray:
    """delta(g_k ... g_1 = 1) on the logical labels, with T_L+ fixing forward edges and T_L- backward ones."""
    lat, G, K = model.lattice, model.group, model.d
    plq = lat.plaquettes[p]
    # per-edge logical T actions are diagonal: T_L+^g = delta(k = g), T_L-^g = delta(k^-1 = g)
    for e, f in plq.cycle:
        for g in G.elements:
            t = _edge_logical(model, "T_L+" if f else "T_L-", g)
            want = np.zeros(K)
            want[g if f else G.inverse[g]] = 1
            if np.abs(t - np.diag(want)).max() > 1e-10:
                raise RuntimeError("logical T action is not the expected diagonal projector")
    idx = np.arange(model.logical_dim)
    digits = (idx[:, None] // K ** np.arange(model.n_edges)) % K
    cfg = digits[:, plq.edges]
    # logical labels of a backward edge enter as k^-1 through T_L-, matching the physical B(p)
    d = plaquette_indicator(G, [f for _, f in plq.cycle], cfg)
    return np.diag(d).astype(complex)


def plaquette_holonomy(model: PerturbedModel, p: int) -> np.ndarray:
    """Holonomy g_k ... g_1 of plaquette p for every logical basis label."""
    lat, G, K = model.lattice, model.group, model.d
    plq = lat.plaquettes[p]
    idx = np.arange(model.logical_dim)
    cfg = ((idx[:, None] // K ** np.arange(model.n_edges)) % K)[:, plq.edges]
    hol = np.full(len(idx), -1)
    for g in G.elements:
        hol[plaquette_indicator(G, [f for _, f in plq.cycle], cfg, g) > 0] = g
    return hol


def encoded_centralizer(model: PerturbedModel, p: int) -> np.ndarray:
    """Diagonal |C_G(hol_p)| / |G|.  Equals 1 for abelian groups; for non-abelian ones it
    is the class function left by L-type bond terms whose group label is conjugated by
    the logical label on each side of the plaquette loop."""
    G = model.group
    cent = np.array([sum(G.mul(g, h) == G.mul(h, g) for h in G.elements) for g in G.elements])
    return np.diag(cent[plaquette_holonomy(model, p)] / G.order).astype(complex)


def encoded_target(kind: str, site: int, model: PerturbedModel) -> np.ndarray:
    if kind == "A":
        return encoded_vertex(model, site)
    if kind == "B":
        return encoded_plaquette(model, site)
    if kind == "C":
        return encoded_centralizer(model, site)
    raise ValueError("kind must be 'A', 'B' or 'C'")


def default_targets(model: PerturbedModel, centralizer: bool = False) -> dict[str, np.ndarray]:
    """A(v) per full vertex and B(p) per plaquette; ``centralizer`` adds C(p) for non-abelian groups."""
    out = {f"A({v})": encoded_vertex(model, v) for v in model.lattice.full_vertices()}
    out.update({f"B({p})": encoded_plaquette(model, p) for p in range(len(model.lattice.plaquettes))})
    if centralizer and not model.group.is_abelian:
        out.update({f"C({p})": encoded_centralizer(model, p) for p in range(len(model.lattice.plaquettes))})
    return out


@dataclass
class FitResult:
    c_I: float
    c_A: float | None
    c_B: float | None
    per_site: dict = field(default_factory=dict)
    relative_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"c_I": self.c_I, "c_A": self.c_A, "c_B": self.c_B, "residual": self.relative_residual,
                "per_site": self.per_site, **self.meta}


def fit_effective(sigma: SelfEnergy, targets: dict[str, np.ndarray], rank_tol: float = 1e-10) -> FitResult:
    """Least squares Sigma = c_I I - sum_v c_v A(v) - sum_p c_p B(p) on the lambda-free coefficient."""
    S = sigma.coefficient
    D = S.shape[0]
    names = list(targets)
    basis = [np.eye(D)] + [targets[n] for n in names]
    M = np.stack([b.reshape(-1) for b in basis], axis=1)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] < rank_tol * sv[0]:
        raise ValueError("target span is rank deficient")
    coef, *_ = np.linalg.lstsq(M, S.reshape(-1), rcond=None)
    if np.abs(coef.imag).max() > 1e-9 * max(1.0, np.abs(coef).max()):
        raise RuntimeError("fit coefficients are not real")
    coef = coef.real
    fit = (M @ coef).reshape(D, D)
    nS = np.linalg.norm(S)
    res = float(np.linalg.norm(S - fit) / nS) if nS > 0 else 0.0
    per = {n: float(-c) for n, c in zip(names, coef[1:])}
    cA = [per[n] for n in names if n.startswith("A")]
    cB = [per[n] for n in names if n.startswith("B")]
    meta = {"order": sigma.order, "mode": sigma.mode}
    cC = [per[n] for n in names if n.startswith("C")]
    if cC:
        meta["c_C"] = float(np.mean(cC))
    return FitResult(float(coef[0]), float(np.mean(cA)) if cA else None, float(np.mean(cB)) if cB else None,
                     per, min(res, 1.0), meta)
