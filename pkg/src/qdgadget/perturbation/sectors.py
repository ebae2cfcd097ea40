"""Exact full-space evaluation of Upsilon V (G0 V)^(n-1) Upsilon.

``reduce=False`` works on the complete product of gadget eigenbases (every
gadget in its own eigenbasis, Green's function diagonal).  ``direct`` keeps
the computational basis: V stays a sparse matrix and only the Green's function
is applied through each gadget's block eigendecomposition.  ``reduce=True``
splits the problem by the logical operators supported away from the bonded
corners: they commute with H0 and V, so each joint sector is evolved inside the
Krylov closure of its logical state under the gadget Hamiltonian and the
bonded-corner operators.  Both are exact; the second only needs abelian groups.
"""

from __future__ import annotations

from itertools import product

import numpy as np
import scipy.sparse as sp

from ..gadget import logical_action, make_gadget
from ..lattice import L_SIGN
from ..linalg import kron_all
from ..qd import L_op, T_plus
from .levelnet import FAMILY_SUPPORT, LEVEL_TOL
from .bonds import bond_local
from .model import MemoryGuardError

FULL_MAX_DIM = 2 ** 22
DIRECT_MAX_DIM = 2 ** 22


def _apply_axis(X, M, axis):
    return np.moveaxis(np.tensordot(M, X, axes=([1], [axis])), 0, axis)


class _Joint:
    """Per-gadget bases (columns in the gadget's 4-qudit space) diagonalising H_e."""

    def __init__(self, model, edges, bases, energies):
        self.model = model
        self.edges = edges
        self.pos = {e: i for i, e in enumerate(edges)}
        self.energies = energies
        gad = model.gadget
        self.terms = []
        for b in model.lattice.bonds:
            ts = model.bond_terms(b)
            ia, ib = self.pos[b.a.edge], self.pos[b.b.edge]
            Ya, Yb = bases[ia], bases[ib]
            ops = []
            for c, A, B in ts:
                Oa = gad.local({b.a.slot: A}) @ Ya
                Ob = gad.local({b.b.slot: B}) @ Yb
                Ra, Rb = Ya.conj().T @ Oa, Yb.conj().T @ Ob
                err = max(np.abs(Oa - Ya @ Ra).max(), np.abs(Ob - Yb @ Rb).max())
                if err > 1e-9:
                    raise RuntimeError(f"reduced basis not closed under a bond operator ({err:.2e})")
                ops.append((c, Ra, Rb))
            self.terms.append((ia, ib, ops))
        E0 = model.ground.energy
        dsum = np.zeros([len(w) for w in energies])
        for ax, w in enumerate(energies):
            shp = [1] * len(energies)
            shp[ax] = -1
            dsum = dsum + (w - E0).reshape(shp)
        self.G = np.where(dsum > LEVEL_TOL, -1.0 / np.where(dsum > LEVEL_TOL, dsum, 1.0), 0.0)

    def V(self, X):
        out = np.zeros_like(X)
        for ia, ib, ops in self.terms:
            T = sum(c * np.multiply.outer(Ra, Rb).transpose(0, 2, 1, 3) for c, Ra, Rb in ops)
            Y = np.tensordot(T, X, axes=([2, 3], [ia, ib]))
            out += np.moveaxis(Y, [0, 1], [ia, ib])
        return out

    def V_product(self, vecs):
        """V applied to the product state (x)_i vecs[i] (each (K_i, batch_i) with batch 1)."""
        shape = tuple(v.shape[0] for v in vecs)
        out = np.zeros(shape, complex)
        for ia, ib, ops in self.terms:
            for c, Ra, Rb in ops:
                vs = list(vecs)
                vs[ia] = Ra @ vs[ia]
                vs[ib] = Rb @ vs[ib]
                t = vs[0]
                for v in vs[1:]:
                    t = np.multiply.outer(t, v)
                out += c * t
        return out

    def _g(self, Y):
        return Y * self.G.reshape(self.G.shape + (1,) * (Y.ndim - self.G.ndim))

    def sigma(self, X0, n, vecs=None):
        """Gram form over trailing batch axes.

        n = 2p + 1: <a_p | V | a_p>;  n = 2p + 2: <V a_p | G | V a_p>, with a_j = (G V)^j X0.
        """
        p = (n - 1) // 2
        a = X0
        for j in range(p):
            Y = self.V_product(vecs)[..., None] if (j == 0 and vecs is not None) else self.V(a)
            a = self._g(Y)
        nd = len(self.edges)
        flat = lambda T: T.reshape(int(np.prod(T.shape[:nd])), -1)
        if n % 2:
            return flat(a).conj().T @ flat(self.V(a))
        if p == 0 and vecs is not None:
            b = self.V_product(vecs)[..., None]
        else:
            b = self.V(a)
        return flat(b).conj().T @ flat(self._g(b))


def _touched(model):
    touched = {}
    for b in model.lattice.bonds:
        touched.setdefault(b.a.edge, set()).add(b.a.slot)
        touched.setdefault(b.b.edge, set()).add(b.b.slot)
    return touched


def _embed_logical(sig_touched, edges, n_edges, K):
    """Sigma on touched edges (little-endian over ``edges``) -> all edges (identity elsewhere)."""
    m = len(edges)
    T = sig_touched.reshape([K] * (2 * m))  # axes: rows reversed, cols reversed
    ops = [T, [("r", e) for e in reversed(edges)] + [("c", e) for e in reversed(edges)]]
    for e in range(n_edges):
        if e not in edges:
            ops += [np.eye(K), [("r", e), ("c", e)]]
    out = [("r", e) for e in reversed(range(n_edges))] + [("c", e) for e in reversed(range(n_edges))]
    sym = {}
    conv = []
    for i, o in enumerate(ops):
        conv.append(o if i % 2 == 0 else [sym.setdefault(x, len(sym)) for x in o])
    res = np.einsum(*conv, [sym[x] for x in out])
    D = K ** n_edges
    return res.reshape(D, D)


def brute_force(model, n: int) -> np.ndarray:
    """Complete eigenbasis product; limited by ``FULL_MAX_DIM`` on the touched gadgets."""
    touched = _touched(model)
    edges = sorted(touched)
    gad, gs = model.gadget, model.ground
    N, K = gad.N, gs.basis.shape[1]
    if N ** len(edges) * K ** len(edges) > FULL_MAX_DIM * 16:
        raise MemoryGuardError("brute-force self energy too large; use reduce=True or factorized mode")
    w, U = np.linalg.eigh(gad.hamiltonian.dense())
    J = _Joint(model, edges, [U] * len(edges), [w] * len(edges))
    phi = U.conj().T @ gs.basis  # (N, K)
    # kron_all is little-endian: the reshape yields gadget axes in reversed order
    X0 = kron_all([phi] * len(edges))
    X0 = X0.reshape([N] * len(edges) + [K ** len(edges)])
    X0 = np.moveaxis(X0, list(range(len(edges))), list(range(len(edges)))[::-1])
    sig = J.sigma(X0, n)
    return _embed_logical(sig, edges, model.n_edges, K)


def _krylov(vecs, gens, tol=1e-10):
    Q = []
    work = list(vecs)
    while work:
        v = work.pop()
        for q in Q:
            v = v - q * np.vdot(q, v)
        for q in Q:
            v = v - q * np.vdot(q, v)
        nv = np.linalg.norm(v)
        if nv > tol:
            v = v / nv
            Q.append(v)
            work += [g @ v for g in gens]
    return np.stack(Q, axis=1)


def sector_reduced(model, n: int, seed: int = 0) -> np.ndarray:
    G = model.group
    if not G.is_abelian:
        raise ValueError("sector reduction needs one-dimensional logical sectors (abelian group)")
    touched = _touched(model)
    edges = sorted(touched)
    gad, gs = model.gadget, model.ground
    gen = make_gadget(G, "general")
    K = gs.basis.shape[1]
    rng = np.random.default_rng(seed)
    H = gad.hamiltonian.matrix
    per = []
    for e in edges:
        fam = [n_ for n_, sup in FAMILY_SUPPORT.items() if not touched[e] & set(sup)]
        if not fam:
            raise ValueError(f"edge {e}: every logical family touches a bonded corner")
        cs = [logical_action(gen.operator(fam[0], g=g), gs) for g in G.elements]
        a = rng.normal(size=len(cs)) + 1j * rng.normal(size=len(cs))
        h = sum(ai * c + np.conj(ai) * c.conj().T for ai, c in zip(a, cs))
        ev, u = np.linalg.eigh(h)
        if np.min(np.diff(ev)) < 1e-6:
            raise RuntimeError("logical family does not resolve one-dimensional sectors")
        gens = [H]
        for q in touched[e]:
            for g in G.elements:
                gens.append(gad.local({q: L_op(G, g, L_SIGN[q])}))
                gens.append(gad.local({q: T_plus(G, g)}))
        sectors = []
        for s in range(K):
            phi = gs.basis @ u[:, s]
            Q = _krylov([phi], gens)
            hk = Q.conj().T @ (H @ Q)
            w, y = np.linalg.eigh((hk + hk.conj().T) / 2)
            Y = Q @ y
            sectors.append((Y, w, Y.conj().T @ phi))
        per.append((u, sectors))
    diag = {}
    for tup in product(range(K), repeat=len(edges)):
        bases = [per[i][1][s][0] for i, s in enumerate(tup)]
        ws = [per[i][1][s][1] for i, s in enumerate(tup)]
        J = _Joint(model, edges, bases, ws)
        X0 = per[0][1][tup[0]][2]
        for i in range(1, len(edges)):
            X0 = np.multiply.outer(X0, per[i][1][tup[i]][2])
        vecs = [per[i][1][s][2][:, None] for i, s in enumerate(tup)]
        diag[tup] = J.sigma(X0[..., None], n, [v[:, 0] for v in vecs])[0, 0]
    # back to the k frame: Sigma = U diag U^dag with U = (x) u_e (little-endian over edges)
    U = kron_all([p[0] for p in per])
    vals = np.zeros(K ** len(edges), complex)
    for tup, v in diag.items():
        idx = sum(s * K ** i for i, s in enumerate(tup))
        vals[idx] = v
    sig = (U * vals) @ U.conj().T
    return _embed_logical(sig, edges, model.n_edges, K)


def _mode_apply(X, M, m, N):
    """Apply the N x N (sparse) matrix M on every gadget axis of X: (N**m, c)."""
    c = X.shape[1]
    T = X.reshape((N,) * m + (c,))
    for ax in range(m):
        T = np.moveaxis(T, ax, 0)
        sh = T.shape
        T = np.moveaxis((M @ T.reshape(N, -1)).reshape(sh), 0, ax)
    return T.reshape(N ** m, c)


def direct_gram(model, n: int, chunk: int = 6) -> np.ndarray:
    """Computational-basis evaluation on the bonded gadgets, any group."""
    touched = _touched(model)
    edges = sorted(touched)
    pos = {e: i for i, e in enumerate(edges)}
    m = len(edges)
    gad, gs = model.gadget, model.ground
    N, K = gad.N, gs.basis.shape[1]
    if N ** m > DIRECT_MAX_DIM:
        raise MemoryGuardError(f"direct evaluation needs dimension {N ** m} > {DIRECT_MAX_DIM}")
    d, nq = model.d, 4 * m
    locs = []
    for b in model.lattice.bonds:
        qa = 4 * pos[b.a.edge] + b.a.slot
        qb = 4 * pos[b.b.edge] + b.b.slot
        # local index xa + d xb, so C-order axes are (b, a)
        B = bond_local(model.group, model.variant, b.a.slot, b.b.slot).reshape(d, d, d, d)
        locs.append((B, nq - 1 - qb, nq - 1 - qa))

    def apply_V(X):
        c = X.shape[1]
        T = X.reshape((d,) * nq + (c,))
        out = np.zeros_like(T)
        for B, ab, aa in locs:
            Y = np.tensordot(B, T, axes=([2, 3], [ab, aa]))
            out += np.moveaxis(Y, [0, 1], [ab, aa])
        return out.reshape(X.shape)

    rows, cols, vals, w = [], [], [], np.zeros(N)
    for idx, ev, vec in gad.block_spectrum:
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        vals.append(vec.ravel())
        w[idx] = ev
    U = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    Uh = U.conj().T.tocsr()
    # a state's excitation needs its eigen-column energies; columns follow idx placement
    dsum = np.zeros((N,) * m)
    for ax in range(m):
        shp = [1] * m
        shp[m - 1 - ax] = -1  # C-order axes run over gadgets in reverse
        dsum = dsum + (w - gs.energy).reshape(shp)
    Gd = np.where(dsum > LEVEL_TOL, -1.0 / np.where(dsum > LEVEL_TOL, dsum, 1.0), 0.0).reshape(-1)

    def green(X):
        Y = _mode_apply(X, Uh, m, N) * Gd[:, None]
        return _mode_apply(Y, U, m, N)

    p = (n - 1) // 2
    nl = K ** m
    L = np.empty((N ** m, nl), complex)
    for c0 in range(0, nl, chunk):
        # codespace columns, edge 0 fastest
        ks = [(np.arange(c0, min(c0 + chunk, nl)) // K ** i) % K for i in range(m)]
        a = np.ones((1, len(ks[0])), complex)
        for i in range(m):
            a = (gs.basis[:, ks[i]][:, None, :] * a[None, :, :]).reshape(-1, a.shape[1])
        for _ in range(p):
            a = green(apply_V(a))
        L[:, c0:c0 + a.shape[1]] = a if n % 2 else apply_V(a)
    out = np.zeros((nl, nl), complex)
    for c0 in range(0, nl, chunk):
        R = L[:, c0:c0 + chunk]
        Y = apply_V(R) if n % 2 else green(R)
        # (Y^dag L)^dag avoids a conjugated copy of L
        out[:, c0:c0 + chunk] = (Y.conj().T @ L).conj().T
    return _embed_logical(out, edges, model.n_edges, K)
