"""Single-edge quantum double operators and the reference model H = -sum A(v) - sum B(p)."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sp

from .groups import FiniteGroup, IrrepTable, irreps
from .lattice import DirectedLattice, Plaquette
from .linalg import Operator, SiteSpace, embed, identity


@dataclass(frozen=True)
class EdgeOp:
    """One of L(g), T(g) or Z(pi, i, j) with sign +1 / -1."""

    kind: str  # "L", "T" or "Z"
    sign: int
    g: int | None = None
    irrep: int | None = None
    i: int = 0
    j: int = 0

    def __post_init__(self):
        if self.kind not in ("L", "T", "Z"):
            raise ValueError(f"unknown edge operator kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def L_plus(G: FiniteGroup, g: int) -> np.ndarray:
    """sum_h |gh><h|"""
    m = np.zeros((G.order, G.order))
    m[G.mult[g], np.arange(G.order)] = 1
    return m


def L_minus(G: FiniteGroup, g: int) -> np.ndarray:
    """sum_h |h g^-1><h|"""
    m = np.zeros((G.order, G.order))
    m[G.mult[:, G.inverse[g]], np.arange(G.order)] = 1
    return m


def T_plus(G: FiniteGroup, g: int) -> np.ndarray:
    m = np.zeros((G.order, G.order))
    m[g, g] = 1
    return m


def T_minus(G: FiniteGroup, g: int) -> np.ndarray:
    return T_plus(G, int(G.inverse[g]))


def L_op(G, g, sign):
    return L_plus(G, g) if sign > 0 else L_minus(G, g)


def T_op(G, g, sign):
    return T_plus(G, g) if sign > 0 else T_minus(G, g)


def Z_diag(table: IrrepTable, p: int, i: int, j: int, sign: int) -> np.ndarray:
    """Diagonal of Z_+^{pi_ij} = sum_g pi(g)_ij T_+^g (and Z_- with T_-)."""
    r = table[p]
    if not (0 <= i < r.dim and 0 <= j < r.dim):
        raise ValueError(f"irrep index ({i},{j}) out of range for {r.label} of dimension {r.dim}")
    vals = r.matrices[:, i, j]
    G = table.group
    return vals if sign > 0 else vals[G.inverse]


def Z_op(table: IrrepTable, p: int, i: int, j: int, sign: int) -> np.ndarray:
    return np.diag(Z_diag(table, p, i, j, sign))


def local_matrix(op: EdgeOp, G: FiniteGroup, table: IrrepTable | None = None) -> np.ndarray:
    if op.kind in ("L", "T"):
        if op.g is None or not 0 <= op.g < G.order:
            raise ValueError(f"invalid group element {op.g}")
        return (L_op if op.kind == "L" else T_op)(G, op.g, op.sign)
    table = table or irreps(G)
    if op.irrep is None or not 0 <= op.irrep < len(table):
        raise ValueError(f"invalid irrep index {op.irrep}")
    return Z_op(table, op.irrep, op.i, op.j, op.sign)


def edge_operator(op: EdgeOp, G: FiniteGroup, edge: int, space: SiteSpace,
                  table: IrrepTable | None = None) -> Operator:
    return embed(local_matrix(op, G, table), [edge], space)


def T_from_Z(table: IrrepTable, g: int, sign: int) -> np.ndarray:
    """T^g = (1/|G|) sum_pi d_pi sum_ij conj(pi(g)_ij) Z^{pi_ij}."""
    G = table.group
    out = np.zeros((G.order, G.order), dtype=complex)
    for p, i, j in table.entries():
        r = table[p]
        out += r.dim * np.conj(r.matrices[g, i, j]) * Z_op(table, p, i, j, sign)
    return out / G.order


def t_reconstruction_error(table: IrrepTable) -> float:
    G = table.group
    return max(np.abs(T_from_Z(table, g, s) - T_op(G, g, s)).max()
               for g in G.elements for s in (1, -1))


def commutation_relation_error(G: FiniteGroup) -> float:
    """L_s^g T_s^h = T_s^{gh} L_s^g and L_s^g T_-s^h = T_-s^{h g^-1} L_s^g."""
    err = 0.0
    for g, h in product(G.elements, repeat=2):
        for s in (1, -1):
            L = L_op(G, g, s)
            same = T_op(G, G.mul(g, h), s) @ L
            err = max(err, np.abs(L @ T_op(G, h, s) - same).max())
            cross = T_op(G, G.mul(h, G.inv(g)), -s) @ L
            err = max(err, np.abs(L @ T_op(G, h, -s) - cross).max())
    return float(err)


# ---------------------------------------------------------------- cyclic forms


def cyclic_L(d: int) -> np.ndarray:
    """sum_h |h+1><h|"""
    return np.roll(np.eye(d), 1, axis=0)


def cyclic_Z(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def fourier_matrix(d: int) -> np.ndarray:
    w = np.exp(2j * np.pi / d)
    k = np.arange(d)
    return w ** np.outer(k, k) / np.sqrt(d)


def fourier_conjugacy_error(d: int) -> float:
    """L and Z are related by the discrete Fourier transform: F^dag Z F = L;
    also L^dag = L^{d-1} and Z^dag = Z^{d-1}."""
    F = fourier_matrix(d)
    L, Z = cyclic_L(d), cyclic_Z(d)
    e1 = np.abs(F.conj().T @ Z @ F - L).max()
    e2 = np.abs(L.conj().T - np.linalg.matrix_power(L, d - 1)).max()
    e3 = np.abs(Z.conj().T - np.linalg.matrix_power(Z, d - 1)).max()
    return float(max(e1, e2, e3))


# ---------------------------------------------------------------- model


def _star_signs(lat: DirectedLattice, v: int) -> list[tuple[int, int]]:
    out = []
    for e in lat.star(v):
        # a self-consistent lattice has every star edge pointing in (v+) or out (v-)
        out.append((e, 1 if lat.edges[e].head == v else -1))
    return out


def vertex_local(G: FiniteGroup, signs: list[int]) -> np.ndarray:
    """(1/|G|) sum_g (x) L_{s_i}^g on len(signs) qudits, first factor fastest."""
    n = G.order ** len(signs)
    out = sp.csr_matrix((n, n), dtype=complex)
    for g in G.elements:
        m = sp.identity(1, format="csr")
        for s in signs:
            m = sp.kron(sp.csr_matrix(L_op(G, g, s)), m, format="csr")
        out = out + m
    return out / G.order


def vertex_projector(v: int, G: FiniteGroup, lat: DirectedLattice, space: SiteSpace | None = None) -> Operator:
    space = space or SiteSpace.uniform(G.order, lat.n_edges)
    es = _star_signs(lat, v)
    return embed(vertex_local(G, [s for _, s in es]), [e for e, _ in es], space, hermitian=True)


def plaquette_indicator(G: FiniteGroup, forward: list[bool], configs: np.ndarray, g: int | None = None) -> np.ndarray:
    """delta(g_k ... g_1 = g) per config row; g_i = x_i forward, x_i^-1 backward."""
    g = G.identity if g is None else g
    acc = np.full(configs.shape[0], G.identity, dtype=np.int64)
    for i, f in enumerate(forward):
        x = configs[:, i]
        gi = x if f else G.inverse[x]
        acc = G.mult[gi, acc]  # left-multiply: g_i (g_{i-1} ... g_1)
    return (acc == g).astype(float)


def plaquette_projector(p: Plaquette, G: FiniteGroup, lat: DirectedLattice | None = None,
                        space: SiteSpace | None = None, g: int | None = None) -> Operator:
    """B^g(p) as a diagonal operator; B(p) = B^1(p)."""
    if lat is not None:
        ends = lat.traversal_vertices(p)
        for i, (e, f) in enumerate(p.cycle):
            start = lat.edges[e].tail if f else lat.edges[e].head
            if start != ends[i - 1]:
                raise ValueError("plaquette boundary is not an ordered closed cycle")
    edges = p.edges
    if len(set(edges)) != len(edges):
        # an edge traversed twice: evaluate on the full space directly
        space = space or SiteSpace.uniform(G.order, lat.n_edges)
        dig = space.digits(np.arange(space.total_dim))
        d = plaquette_indicator(G, [f for _, f in p.cycle], dig[:, edges], g)
        return Operator(space, sp.diags(d).tocsr(), set(edges), hermitian=True)
    space = space or SiteSpace.uniform(G.order, lat.n_edges)
    k = len(edges)
    loc = SiteSpace.uniform(G.order, k)
    dig = loc.digits(np.arange(loc.total_dim))
    d = plaquette_indicator(G, [f for _, f in p.cycle], dig, g)
    return embed(sp.diags(d).tocsr(), edges, space, hermitian=True)


@dataclass
class QDModel:
    group: FiniteGroup
    lattice: DirectedLattice
    hamiltonian: Operator
    A: list[Operator] = field(default_factory=list)
    B: list[Operator] = field(default_factory=list)

    @property
    def space(self) -> SiteSpace:
        return self.hamiltonian.space

    def projector_errors(self) -> float:
        err = 0.0
        for P in self.A + self.B:
            d = P.matrix @ P.matrix - P.matrix
            err = max(err, abs(d).max() if d.nnz else 0.0)
        return float(err)

    def commutator_error(self) -> float:
        terms = self.A + self.B
        err = 0.0
        for i in range(len(terms)):
            for j in range(i + 1, len(terms)):
                if terms[i].support & terms[j].support:
                    err = max(err, terms[i].commutator_norm(terms[j]))
        return err


def qd_hamiltonian(lat: DirectedLattice, G: FiniteGroup) -> QDModel:
    space = SiteSpace.uniform(G.order, lat.n_edges)
    A = [vertex_projector(v, G, lat, space) for v in range(lat.n_vertices) if lat.star(v)]
    B = [plaquette_projector(p, G, lat, space) for p in lat.plaquettes]
    H = identity(space) * 0.0
    for P in A + B:
        H = H - P
    H.hermitian = True
    return QDModel(G, lat, H, A, B)
