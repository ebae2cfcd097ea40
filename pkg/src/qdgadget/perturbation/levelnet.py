"""Factorized evaluation of Upsilon V (G0 V)^(n-1) Upsilon.

Along a bond sequence every gadget only sees its own corner operators, and
between consecutive insertions it sits in one of the discrete levels of its
Hamiltonian.  The denominator of each Green's function is the sum of the
active gadgets' level excitations, so the whole product factorizes into one
tensor per gadget

    F_e[alpha per touch, level per internal interval, mu]

contracted with the (small) denominator tensors.  The logical action of each
factor is expanded in an orthonormal basis mu of the commutant of the logical
operators supported away from the gadget's bonded corners, which keeps the
tensors |G|-sized per gadget instead of |G|^2.

Gadget Hamiltonians are block diagonal in (x2 x3, x1 x4), and every bond
operator maps one block to exactly one block, so the single-gadget chains are
propagated block by block in the eigenbasis and met in the middle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..gadget import Gadget, GroundSpace, make_gadget

LEVEL_TOL = 1e-8
FAMILY_SUPPORT = {"L_L+": (0, 1), "L_L-": (2, 3), "T_L+": (1, 2), "T_L-": (3, 0)}


@dataclass
class OpSet:
    """A list of block-structured operators: block beta -> perm[a, beta] via mats[a, beta]."""

    perm: np.ndarray  # (A, B)
    mats: np.ndarray  # (A, B, s, s)

    def adjoint(self) -> "OpSet":
        A, B = self.perm.shape
        inv = np.empty_like(self.perm)
        mats = np.empty_like(self.mats)
        for a in range(A):
            if len(set(self.perm[a])) != B:
                raise ValueError("operator does not permute gadget blocks")
            inv[a, self.perm[a]] = np.arange(B)
            mats[a, self.perm[a]] = self.mats[a].conj().transpose(0, 2, 1)
        return OpSet(inv, mats)


class GadgetLevels:
    """Eigen-data of one gadget, organised by conserved block and level."""

    def __init__(self, gadget: Gadget, ground: GroundSpace):
        self.gadget = gadget
        blocks = gadget.block_spectrum
        sizes = {len(idx) for idx, _, _ in blocks}
        if len(sizes) != 1:
            raise ValueError("gadget blocks have unequal sizes")
        self.s = sizes.pop()
        self.B = len(blocks)
        E0 = ground.energy
        allw = np.sort(np.concatenate([w for _, w, _ in blocks]))
        lev = [allw[0]]
        for w in allw[1:]:
            if w - lev[-1] > LEVEL_TOL:
                lev.append(w)
        self.levels = np.array(lev)
        if abs(self.levels[0] - E0) > LEVEL_TOL:
            raise ValueError("lowest gadget level differs from the ground energy")
        self.delta = self.levels - self.levels[0]
        self.delta[0] = 0.0
        self.nlev = len(lev)
        self.idx = np.stack([idx for idx, _, _ in blocks])
        self.U = np.stack([v for _, _, v in blocks])
        self.lev = np.stack([np.abs(w[:, None] - self.levels[None, :]).argmin(axis=1) for _, w, _ in blocks])
        self.blk = np.empty(gadget.N, dtype=np.int64)
        for b, idx in enumerate(self.idx):
            self.blk[idx] = b
        # ground basis in block eigen-coordinates
        V = ground.basis
        K = V.shape[1]
        self.K = K
        self.psi_blk = np.empty(K, dtype=np.int64)
        self.psi = np.zeros((K, self.s), complex)
        for k in range(K):
            sup = np.flatnonzero(np.abs(V[:, k]) > 1e-14)
            bs = np.unique(self.blk[sup])
            if len(bs) != 1:
                raise ValueError("logical basis state spans several gadget blocks")
            b = bs[0]
            self.psi_blk[k] = b
            self.psi[k] = self.U[b].conj().T @ V[self.idx[b], k]
            if np.abs(self.psi[k][self.lev[b] != 0]).max(initial=0) > 1e-9:
                raise ValueError("logical basis state leaves the ground level")
        # onehot (B, nlev, s)
        self.onehot = (self.lev[:, None, :] == np.arange(self.nlev)[None, :, None])

    def opset(self, mats: list[np.ndarray], slot: int) -> OpSet:
        A = len(mats)
        perm = np.empty((A, self.B), dtype=np.int64)
        out = np.zeros((A, self.B, self.s, self.s), complex)
        for a, m in enumerate(mats):
            O = self.gadget.local({slot: m}).tocsc()
            for b in range(self.B):
                sub = O[:, self.idx[b]]
                rows = sub.nonzero()[0]
                tb = np.unique(self.blk[rows])
                if len(tb) > 1:
                    raise ValueError("corner operator mixes gadget blocks")
                t = tb[0] if len(tb) else b
                perm[a, b] = t
                blockm = O[self.idx[t]][:, self.idx[b]].toarray()
                out[a, b] = self.U[t].conj().T @ blockm @ self.U[b]
        return OpSet(perm, out)

    def connectivity(self, ops: OpSet, tol: float = 1e-12) -> np.ndarray:
        """(A, B, nlev_target, nlev_source) boolean level transfer."""
        nz = (np.abs(ops.mats) > tol).astype(float)
        oh = self.onehot.astype(float)
        A = ops.perm.shape[0]
        out = np.zeros((A, self.B, self.nlev, self.nlev), bool)
        for a in range(A):
            for b in range(self.B):
                tb = ops.perm[a, b]
                out[a, b] = (oh[tb] @ nz[a, b] @ oh[b].T) > 0
        return out


def _apply(blk, vec, ops: OpSet):
    """rows (R,) -> (R, A): blk, vec (R, s)"""
    A = ops.perm.shape[0]
    R, s = vec.shape
    nblk = np.empty((R, A), dtype=np.int64)
    nvec = np.empty((R, A, s), complex)
    order = np.argsort(blk, kind="stable")
    sb = blk[order]
    cuts = np.flatnonzero(np.diff(sb)) + 1
    for grp in np.split(order, cuts):
        if grp.size == 0:
            continue
        b = blk[grp[0]]
        v = vec[grp]
        for a in range(A):
            nblk[grp, a] = ops.perm[a, b]
            nvec[grp, a] = v @ ops.mats[a, b].T
    return nblk, nvec


def _mask(blk, vec, onehot, levels):
    """rows (R,) -> (R, L) by projecting onto each level in ``levels``."""
    m = onehot[blk][:, levels, :]  # (R, L, s)
    return np.repeat(blk[:, None], len(levels), axis=1), vec[:, None, :] * m


class GadgetFactors:
    """Cache of F tensors for one gadget and commutant basis mu."""

    def __init__(self, gl: GadgetLevels, opsets: dict, mu: np.ndarray, cache_bytes: int = 400 * 2 ** 20):
        self.gl = gl
        self.opsets = opsets  # key -> OpSet
        self.adj = {k: v.adjoint() for k, v in opsets.items()}
        self.conn = {k: gl.connectivity(v) for k, v in opsets.items()}
        self.mu = mu  # (r, K, K)
        self.cache: dict = {}
        self.cache_bytes = cache_bytes
        self.cached = 0
        self.max_residual = 0.0

    def _reach(self, keys):
        """allowed level ids per internal interval (None if the chain cannot return)."""
        gl = self.gl
        m = len(keys)
        S = np.zeros((gl.B, gl.nlev), bool)
        S[gl.psi_blk, 0] = True
        fwd = []
        for key in keys[:-1]:
            S = self._step(S, self.opsets[key], self.conn[key], False)
            fwd.append(S.any(axis=0))
        S = np.zeros((gl.B, gl.nlev), bool)
        S[gl.psi_blk, 0] = True
        bwd = [None] * (m - 1)
        for i in range(m - 1, 0, -1):
            S = self._step(S, self.opsets[keys[i]], self.conn[keys[i]], True)
            bwd[i - 1] = S.any(axis=0)
        allowed = [np.flatnonzero(f & b) for f, b in zip(fwd, bwd)]
        if any(a.size == 0 for a in allowed):
            return None
        return allowed

    @staticmethod
    def _step(S, ops, conn, backward):
        out = np.zeros_like(S)
        A, B = ops.perm.shape
        for a in range(A):
            for b in range(B):
                t = ops.perm[a, b]
                C = conn[a, b]  # (target, source)
                if backward:
                    out[b] |= (C.T.astype(int) @ S[t].astype(int)) > 0
                else:
                    out[t] |= (C.astype(int) @ S[b].astype(int)) > 0
        return out

    def factor(self, keys: tuple):
        if keys in self.cache:
            return self.cache[keys]
        res = self._compute(keys)
        if res is not None and res.nbytes <= self.cache_bytes - self.cached:
            self.cache[keys] = res
            self.cached += res.nbytes
        return res

    def _compute(self, keys):
        gl = self.gl
        m = len(keys)
        allowed = self._reach(keys) if m > 1 else []
        if allowed is None:
            return None
        h = (m + 1) // 2
        K = gl.K
        # forward chain from psi(k): rows (..., k)
        blk = gl.psi_blk.copy()
        vec = gl.psi.copy()
        fdims = []
        for i in range(h):
            blk, vec = _apply(blk.reshape(-1), vec.reshape(-1, gl.s), self.opsets[keys[i]])
            A = self.opsets[keys[i]].perm.shape[0]
            blk = blk.reshape(-1, K, A).transpose(0, 2, 1)
            vec = vec.reshape(-1, K, A, gl.s).transpose(0, 2, 1, 3)
            fdims.append(A)
            if i < h - 1:
                lv = allowed[i]
                b2, v2 = _mask(blk.reshape(-1), vec.reshape(-1, gl.s), gl.onehot, lv)
                L = len(lv)
                blk = b2.reshape(-1, K, L).transpose(0, 2, 1)
                vec = v2.reshape(-1, K, L, gl.s).transpose(0, 2, 1, 3)
                fdims.append(L)
        fblk = blk.reshape(-1, K)
        fvec = vec.reshape(-1, K, gl.s)
        # backward chain from psi(k') with adjoint operators
        blk = gl.psi_blk.copy()
        vec = gl.psi.copy()
        bdims = []
        for i in range(m - 1, h - 1, -1):
            blk, vec = _apply(blk.reshape(-1), vec.reshape(-1, gl.s), self.adj[keys[i]])
            A = self.adj[keys[i]].perm.shape[0]
            blk = blk.reshape(-1, K, A).transpose(0, 2, 1)
            vec = vec.reshape(-1, K, A, gl.s).transpose(0, 2, 1, 3)
            bdims.append(A)
            if i > h:
                lv = allowed[i - 1]
                b2, v2 = _mask(blk.reshape(-1), vec.reshape(-1, gl.s), gl.onehot, lv)
                L = len(lv)
                blk = b2.reshape(-1, K, L).transpose(0, 2, 1)
                vec = v2.reshape(-1, K, L, gl.s).transpose(0, 2, 1, 3)
                bdims.append(L)
        bblk = blk.reshape(-1, K)
        bvec = vec.reshape(-1, K, gl.s)
        join = allowed[h - 1] if h < m else None
        bn, fn, slab, resid = self._join(fblk, fvec, bblk, bvec, join)
        self.max_residual = max(self.max_residual, resid)
        # decode row indices into alpha / level positions, canonical order
        cols: dict = {}
        bidx = np.unravel_index(bn, bdims) if bdims else ()
        fidx = np.unravel_index(fn, fdims)
        j = 0
        for i in range(m - 1, h - 1, -1):
            cols[("a", i)] = bidx[j]
            j += 1
            if i > h:
                cols[("l", i - 1)] = bidx[j]
                j += 1
        j = 0
        for i in range(h):
            cols[("a", i)] = fidx[j]
            j += 1
            if i < h - 1:
                cols[("l", i)] = fidx[j]
                j += 1
        return FactorTable.build(keys, allowed, cols, slab, h - 1 if join is not None else None,
                                 [self.opsets[k].perm.shape[0] for k in keys])

    def _join(self, fblk, fvec, bblk, bvec, levels):
        """Nonzero (backward row, forward row) pairs with their (level, mu) slabs."""
        gl = self.gl
        nf, K = fblk.shape
        r = self.mu.shape[0]
        muc = self.mu.conj()  # (r, k', k)
        fb, fk = np.divmod(np.arange(nf * K), K)
        bb, bk = np.divmod(np.arange(bblk.shape[0] * K), K)
        fblk_f, bblk_f = fblk.reshape(-1), bblk.reshape(-1)
        fv, bv = fvec.reshape(-1, gl.s), bvec.reshape(-1, gl.s)
        total = 0.0
        codes, slabs = [], []
        for beta in np.intersect1d(fblk_f, bblk_f):
            fi = np.flatnonzero(fblk_f == beta)
            bi = np.flatnonzero(bblk_f == beta)
            F = fv[fi]
            Bc = bv[bi].conj()
            if levels is None:
                J = (Bc @ F.T)[None]
            else:
                mask = gl.onehot[beta][levels].astype(float)  # (L, s)
                J = np.einsum("bs,ls,fs->lbf", Bc, mask, F, optimize=True)
            a2 = np.abs(J) ** 2
            total += float(a2.sum())
            pb, pf = np.nonzero(a2.max(axis=0) > 1e-30)
            if pb.size == 0:
                continue
            w = muc[:, bk[bi[pb]], fk[fi[pf]]]  # (r, npair)
            slabs.append(J[:, pb, pf].T[:, :, None] * w.T[:, None, :])
            codes.append(bb[bi[pb]] * nf + fb[fi[pf]])
        L = 1 if levels is None else len(levels)
        if not codes:
            return np.zeros(0, int), np.zeros(0, int), np.zeros((0, L, r), complex), 0.0
        codes = np.concatenate(codes)
        slabs = np.concatenate(slabs)
        uniq, inv = np.unique(codes, return_inverse=True)
        out = np.zeros((len(uniq), L, r), complex)
        np.add.at(out, inv, slabs)
        proj = float(np.sum(np.abs(out) ** 2))
        # squared-norm defect; the commutant argument makes it vanish up to rounding
        resid = max(total - proj, 0.0) / max(1.0, total)
        keep = np.abs(out).reshape(len(uniq), -1).max(axis=1) > 1e-15
        bn, fn = np.divmod(uniq[keep], nf)
        return bn, fn, out[keep], resid


@dataclass
class FactorTable:
    """F_e stored over its nonzero alpha tuples: data[z, l_1..l_{m-1}, mu]."""

    keys: tuple
    allowed: list
    alpha: np.ndarray  # (z, m)
    data: np.ndarray
    adims: tuple

    @classmethod
    def build(cls, keys, allowed, cols, slab, join_pos, adims):
        m = len(keys)
        alpha = np.stack([cols[("a", i)] for i in range(m)], axis=1) if slab.shape[0] else np.zeros((0, m), int)
        code = np.ravel_multi_index(alpha.T, adims) if slab.shape[0] else np.zeros(0, int)
        uz, zi = np.unique(code, return_inverse=True)
        ldims = [len(a) for a in allowed]
        other = [i for i in range(m - 1) if i != join_pos]
        L, r = slab.shape[1], slab.shape[2]
        tmp = np.zeros((len(uz), *[ldims[i] for i in other], L, r), complex)
        tmp[(zi,) + tuple(cols[("l", i)] for i in other)] = slab
        if join_pos is None:
            data = tmp[..., 0, :]
        else:
            data = np.moveaxis(tmp, 1 + len(other), 1 + join_pos)
        zal = np.stack(np.unravel_index(uz, adims), axis=1) if len(uz) else np.zeros((0, m), int)
        return cls(keys, allowed, zal.astype(np.int64), np.ascontiguousarray(data), tuple(adims))

    @property
    def m(self) -> int:
        return len(self.keys)

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    def codes(self) -> np.ndarray:
        return np.ravel_multi_index(self.alpha.T, self.adims) if len(self.alpha) else np.zeros(0, int)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.adims + self.data.shape[1:], complex)
        out[tuple(self.alpha.T)] = self.data
        return out

    def lookup(self, alpha: np.ndarray) -> np.ndarray:
        """data rows for the given (z', m) alpha tuples, zero where absent."""
        out = np.zeros((len(alpha),) + self.data.shape[1:], complex)
        mine = self.codes()
        if len(mine) == 0 or len(alpha) == 0:
            return out
        want = np.ravel_multi_index(alpha.T, self.adims)
        pos = np.searchsorted(mine, want)
        pos = np.minimum(pos, len(mine) - 1)
        hit = mine[pos] == want
        out[hit] = self.data[pos[hit]]
        return out


def commutant_basis(gadget_general: Gadget, ground: GroundSpace, touched: set[int], tol: float = 1e-10) -> np.ndarray:
    """Orthonormal (Frobenius) basis of matrices commuting with every compressed logical
    operator whose support avoids the touched corners."""
    from ..gadget import logical_action

    K = ground.basis.shape[1]
    rows = []
    for name, sup in FAMILY_SUPPORT.items():
        if touched & set(sup):
            continue
        for g in gadget_general.G.elements:
            c = logical_action(gadget_general.operator(name, g=g), ground)
            rows.append(np.kron(c, np.eye(K)) - np.kron(np.eye(K), c.T))
    if not rows:
        return np.eye(K * K).reshape(K * K, K, K).astype(complex)
    M = np.concatenate(rows)
    _, s, vh = np.linalg.svd(M)
    null = vh[np.sum(s > tol * max(1.0, s[0])):].conj()
    # row-major vec(X) pairs with kron(c, I) - kron(I, c^T)
    return null.reshape(-1, K, K)


def family_commutes_with_hamiltonian(gadget: Gadget, touched: set[int]) -> float:
    gen = make_gadget(gadget.G, "general")
    H = gadget.hamiltonian
    err = 0.0
    for name, sup in FAMILY_SUPPORT.items():
        if touched & set(sup):
            continue
        for g in gadget.G.elements:
            err = max(err, gen.operator(name, g=g).commutator_norm(H))
    return err


def factorized_coefficients(model, n: int):
    """Commutant-coordinate tensor of the lambda-free coefficient of Sigma^(n),
    plus the per-gadget bases and an evaluation record."""
    lat = model.lattice
    G = model.group
    gadget = model.gadget
    ground = model.ground
    gl = GadgetLevels(gadget, ground)
    bonds = lat.bonds
    if not bonds:
        raise ValueError("lattice has no bonds")
    terms = model.bond_terms(bonds[0])
    coef = np.array([c for c, _, _ in terms], dtype=complex)
    touched = {}
    for b in bonds:
        touched.setdefault(b.a.edge, set()).add(b.a.slot)
        touched.setdefault(b.b.edge, set()).add(b.b.slot)
    edges = sorted(touched)
    gen = make_gadget(G, "general")
    mus, facs, iotas = {}, {}, {}
    opcache: dict = {}
    for e in edges:
        mu = commutant_basis(gen, ground, touched[e])
        if family_commutes_with_hamiltonian(gadget, touched[e]) > 1e-10:
            raise RuntimeError("untouched logical family does not commute with the gadget Hamiltonian")
        sets = {}
        for b in bonds:
            for side, c in (("a", b.a), ("b", b.b)):
                if c.edge != e:
                    continue
                key = (c.slot, side)
                if key not in opcache:
                    ts = bond_terms_for(model, b)
                    mats = [A if side == "a" else B for _, A, B in ts]
                    opcache[key] = gl.opset(mats, c.slot)
                sets[key] = opcache[key]
        facs[e] = GadgetFactors(gl, sets, mu)
        mus[e] = mu
        iotas[e] = np.einsum("rij,ij->r", mu.conj(), np.eye(gl.K))
    total = np.zeros([mus[e].shape[0] for e in edges], complex)
    nseq = nzero = 0
    paths: dict = {}
    for seq in product(range(len(bonds)), repeat=n):
        nseq += 1
        touches: dict[int, list] = {}
        for t, bi in enumerate(seq):
            b = bonds[bi]
            touches.setdefault(b.a.edge, []).append((t, (b.a.slot, "a")))
            touches.setdefault(b.b.edge, []).append((t, (b.b.slot, "b")))
        # every internal interval needs an excited gadget
        active = [[e for e, tl in touches.items() if tl[0][0] <= j < tl[-1][0]] for j in range(n - 1)]
        if any(not a for a in active):
            nzero += 1
            continue
        operands = []
        sym = {}

        def s(key):
            if key not in sym:
                sym[key] = len(sym)
            return sym[key]

        tabs = {}
        for e, tl in touches.items():
            res = facs[e].factor(tuple(k for _, k in tl))
            if res is None or len(res.alpha) == 0:
                tabs = None
                break
            tabs[e] = res
        if tabs is None:
            nzero += 1
            continue
        lev_lists = {(e, i): lv for e, t in tabs.items() for i, lv in enumerate(t.allowed)}
        times = {e: [t for t, _ in tl] for e, tl in touches.items()}
        # the most-touched gadget carries a z axis over its nonzero alpha tuples;
        # alphas it does not see stay dense on the other factors
        anchor = max(tabs, key=lambda e: (tabs[e].m, -len(tabs[e].alpha)))
        ta = tabs[anchor]
        Z = s(("z",))
        amap = {t: ta.alpha[:, i] for i, t in enumerate(times[anchor])}
        wz = np.ones(len(ta.alpha), complex)
        for t in times[anchor]:
            wz = wz * coef[amap[t]]
        operands.append((ta.data * wz.reshape((-1,) + (1,) * (ta.data.ndim - 1)),
                         [Z] + [s(("l", anchor, i)) for i in range(ta.m - 1)] + [s(("r", anchor))]))
        free_weighted = set()
        for e, tb in tabs.items():
            if e == anchor:
                continue
            ts = times[e]
            shared = [i for i, t in enumerate(ts) if t in amap]
            free = [i for i, t in enumerate(ts) if t not in amap]
            if not free:
                X = tb.lookup(np.stack([amap[ts[i]] for i in range(tb.m)], axis=1))
                subs = [Z]
            else:
                Fd = np.moveaxis(tb.dense(), shared + free, list(range(tb.m)))
                X = Fd[tuple(amap[ts[i]] for i in shared)] if shared else Fd
                for k, i in enumerate(free):
                    if ts[i] not in free_weighted:
                        shp = [1] * X.ndim
                        shp[(1 if shared else 0) + k] = -1
                        X = X * coef.reshape(shp)
                        free_weighted.add(ts[i])
                subs = ([Z] if shared else []) + [s(("a", ts[i])) for i in free]
            subs += [s(("l", e, i)) for i in range(tb.m - 1)] + [s(("r", e))]
            operands.append((X, subs))
        for j in range(n - 1):
            keys = []
            for e in active[j]:
                i = max(ii for ii, t in enumerate(times[e]) if t <= j)
                keys.append((e, i))
            dsum = np.zeros([len(lev_lists[k]) for k in keys])
            for ax, k in enumerate(keys):
                shp = [1] * len(keys)
                shp[ax] = -1
                dsum = dsum + gl.delta[lev_lists[k]].reshape(shp)
            D = np.where(dsum > LEVEL_TOL, -1.0 / np.where(dsum > LEVEL_TOL, dsum, 1.0), 0.0)
            operands.append((D, [s(("l",) + k) for k in keys]))
        hit = [e for e in edges if e in touches]
        out = [s(("r", e)) for e in hit]
        args = [x for op, sub in operands for x in (op, sub)] + [out]
        sig = (tuple(tuple(sub) for _, sub in operands), tuple(op.shape for op, _ in operands))
        if sig not in paths:
            # without a generous memory limit numpy falls back to one naive multi-operand step
            how = "optimal" if len(operands) <= 5 else "greedy"
            paths[sig] = np.einsum_path(*args, optimize=(how, 2 ** 31))[0]
        R = np.einsum(*args, optimize=paths[sig])
        for e in edges:
            if e not in touches:
                R = np.multiply.outer(R, iotas[e])
        # R axes: touched edges (edge order) then untouched; restore edge order
        order = hit + [e for e in edges if e not in touches]
        total += R.transpose([order.index(e) for e in edges])
    record = {
        "sequences": nseq,
        "skipped": nzero,
        "levels": gl.levels.tolist(),
        "commutant_dims": {int(e): int(mus[e].shape[0]) for e in edges},
        "projection_residual": max(f.max_residual for f in facs.values()),
    }
    if record["projection_residual"] > 1e-10:
        raise RuntimeError(f"factor outside the commutant basis (residual {record['projection_residual']:.2e})")
    return total, edges, mus, record


def bond_terms_for(model, b):
    return model.bond_terms(b)


def assemble_logical(total, edges, mus, n_edges: int, K: int) -> np.ndarray:
    """Dense logical matrix, little-endian over edges on both indices."""
    ops = [total, list(range(len(edges)))]
    nxt = len(edges)
    row, col = {}, {}
    for e in range(n_edges):
        row[e], col[e] = nxt, nxt + 1
        nxt += 2
    for i, e in enumerate(edges):
        ops += [mus[e], [i, row[e], col[e]]]
    for e in range(n_edges):
        if e not in edges:
            ops += [np.eye(K), [row[e], col[e]]]
    out = [row[e] for e in reversed(range(n_edges))] + [col[e] for e in reversed(range(n_edges))]
    m = np.einsum(*ops, out, optimize="greedy")
    D = K ** n_edges
    return m.reshape(D, D)
