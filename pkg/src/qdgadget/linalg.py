"""Sparse operators on tensor-product qudit spaces.

Composite indices are little-endian: site 0 varies fastest, so the basis
state (x_0, x_1, ..., x_{n-1}) has index sum_i x_i * prod_{j<i} d_j.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import prod
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_CUTOFF = 4096
DEGENERACY_TOL = 1e-9


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SiteSpace:
    local_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "local_dims", tuple(int(d) for d in self.local_dims))
        if len(self.local_dims) < 1 or min(self.local_dims) < 1:
            raise ValueError("SiteSpace needs at least one site of positive dimension")

    @classmethod
    def uniform(cls, d: int, n: int) -> "SiteSpace":
        return cls((d,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return prod(self.local_dims)

    @property
    def strides(self) -> np.ndarray:
        return np.concatenate([[1], np.cumprod(self.local_dims[:-1])]).astype(np.int64)

    def index(self, config: Sequence[int]) -> int:
        return int(np.dot(self.strides, config))

    def digits(self, idx: np.ndarray | int) -> np.ndarray:
        """(..., n_sites) array of local values."""
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self.strides) % np.array(self.local_dims)


def as_sparse(m) -> sp.csr_matrix:
    return m.tocsr() if sp.issparse(m) else sp.csr_matrix(np.asarray(m, dtype=complex))


class Operator:
    """Sparse complex matrix with site-support metadata."""

    __slots__ = ("space", "matrix", "support", "hermitian")

    def __init__(self, space: SiteSpace, matrix, support=None, hermitian: bool = False):
        m = as_sparse(matrix).astype(complex)
        n = space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {n}")
        if hermitian:
            dev = abs(m - m.getH()).max() if m.nnz else 0.0
            if dev > 1e-12:
                raise ValueError(f"hermitian flag set but max|A - A^dag| = {dev:.3e}")
        self.space = space
        self.matrix = m
        self.support = frozenset(range(space.n_sites) if support is None else support)
        self.hermitian = hermitian

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.getH(), self.support, self.hermitian)

    def _wrap(self, m, other=None, herm=False) -> "Operator":
        sup = self.support | (other.support if other is not None else frozenset())
        return Operator(self.space, m, sup, herm)

    def __add__(self, other: "Operator") -> "Operator":
        return self._wrap(self.matrix + other.matrix, other, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        return self._wrap(self.matrix - other.matrix, other, self.hermitian and other.hermitian)

    def __neg__(self) -> "Operator":
        return self._wrap(-self.matrix, herm=self.hermitian)

    def __mul__(self, c) -> "Operator":
        c = complex(c)
        return self._wrap(self.matrix * c, herm=self.hermitian and c.imag == 0)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return self._wrap(self.matrix @ other.matrix, other)
        return self.matrix @ other

    def commutator_norm(self, other: "Operator") -> float:
        c = self.matrix @ other.matrix - other.matrix @ self.matrix
        return float(abs(c).max()) if c.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.getH()
        return (abs(d).max() if d.nnz else 0.0) < tol


def identity(space: SiteSpace) -> Operator:
    return Operator(space, sp.identity(space.total_dim, dtype=complex, format="csr"), (), True)


def embed(local_op, sites: Sequence[int], space: SiteSpace, hermitian: bool = False) -> Operator:
    """Place ``local_op`` on ``sites`` (first listed site fastest in the local index)."""
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    if any(s < 0 or s >= space.n_sites for s in sites):
        raise ValueError("site index out of range")
    ldims = [space.local_dims[s] for s in sites]
    A = sp.coo_matrix(as_sparse(local_op))
    if A.shape != (prod(ldims), prod(ldims)):
        raise ValueError(f"local operator shape {A.shape} does not match dims {ldims} at sites {sites}")
    strides = space.strides
    lstr = np.concatenate([[1], np.cumprod(ldims[:-1])]).astype(np.int64)
    # global offset contributed by the acting sites for each local index
    def offsets(loc):
        loc = np.asarray(loc, dtype=np.int64)
        out = np.zeros_like(loc)
        for k, s in enumerate(sites):
            out += ((loc // lstr[k]) % ldims[k]) * strides[s]
        return out

    others = [s for s in range(space.n_sites) if s not in sites]
    if others:
        odims = [space.local_dims[s] for s in others]
        rest = np.arange(prod(odims), dtype=np.int64)
        base = np.zeros_like(rest)
        ostr = np.concatenate([[1], np.cumprod(odims[:-1])]).astype(np.int64)
        for k, s in enumerate(others):
            base += ((rest // ostr[k]) % odims[k]) * strides[s]
    else:
        base = np.zeros(1, dtype=np.int64)
    rows = (base[:, None] + offsets(A.row)[None, :]).ravel()
    cols = (base[:, None] + offsets(A.col)[None, :]).ravel()
    vals = np.tile(A.data.astype(complex), len(base))
    n = space.total_dim
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return Operator(space, m, sites, hermitian)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Dense Kronecker product in little-endian order (mats[0] acts on site 0)."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(m, out)
    return out


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_tol: float = DEGENERACY_TOL

    def groups(self) -> np.ndarray:
        """Degeneracy-group label of each eigenvalue."""
        ev = self.eigenvalues
        lab = np.zeros(len(ev), dtype=int)
        for i in range(1, len(ev)):
            lab[i] = lab[i - 1] + (ev[i] - ev[i - 1] > self.degeneracy_tol)
        return lab

    def degeneracy(self, level: int = 0) -> int:
        return int(np.sum(self.groups() == level))

    def gap(self) -> float:
        g = self.groups()
        if g.max() < 1:
            return float("nan")
        return float(self.eigenvalues[g == 1][0] - self.eigenvalues[0])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["index", "eigenvalue", "degeneracy_group"])
            for i, (e, g) in enumerate(zip(self.eigenvalues, self.groups())):
                w.writerow([i, repr(float(e)), int(g)])


def _matrix_of(H):
    return H.matrix if isinstance(H, Operator) else H


def lowest_eigenpairs(H, k: int, tol: float = 1e-10, dense_cutoff: int = DENSE_CUTOFF,
                      seed: int = 0, degeneracy_tol: float = DEGENERACY_TOL) -> Spectrum:
    """k lowest eigenpairs; dense LAPACK up to ``dense_cutoff``, ARPACK Lanczos beyond."""
    m = _matrix_of(H)
    n = m.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds dimension {n}")
    herm_dev = _herm_dev(m)
    if herm_dev > 1e-12:
        raise ValueError(f"operator is not Hermitian (max|A - A^dag| = {herm_dev:.3e})")
    if n <= dense_cutoff:
        dm = m.toarray() if sp.issparse(m) else np.asarray(m)
        w, v = np.linalg.eigh(dm)
        w, v = w[:k], v[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.normal(size=n).astype(np.result_type(m.dtype, np.float64))
        ncv = min(n, max(2 * k + 1, 40))
        try:
            w, v = spla.eigsh(m, k=k, which="SA", v0=v0, ncv=ncv, tol=0, maxiter=20 * n)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("Lanczos did not converge", float("inf")) from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    res = np.linalg.norm(m @ v - v * w, axis=0).max() if k else 0.0
    if res > max(tol, 1e-12) * max(1.0, np.abs(w).max() if k else 1.0):
        raise ConvergenceError("eigenpair residual above tolerance", float(res))
    return Spectrum(np.asarray(w, float), v, degeneracy_tol)


def _herm_dev(m) -> float:
    if sp.issparse(m):
        d = m - m.getH()
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.abs(m - m.conj().T).max())


def full_spectrum(H, degeneracy_tol: float = DEGENERACY_TOL) -> Spectrum:
    m = _matrix_of(H)
    return lowest_eigenpairs(m, m.shape[0], dense_cutoff=max(m.shape[0], DENSE_CUTOFF),
                             degeneracy_tol=degeneracy_tol)


def spectral_projector(spec: Spectrum, band: tuple[float, float],
                       space: SiteSpace | None = None) -> Operator:
    """Projector onto eigenvectors with eigenvalue in [lo, hi]."""
    lo, hi = band
    ev = spec.eigenvalues
    for b in (lo, hi):
        if np.isfinite(b) and np.any(np.abs(ev - b) <= spec.degeneracy_tol):
            raise ValueError(f"band boundary {b} lies within degeneracy tolerance of an eigenvalue")
    sel = (ev >= lo) & (ev <= hi)
    V = spec.eigenvectors[:, sel]
    P = V @ V.conj().T
    P = (P + P.conj().T) / 2
    P[np.abs(P) < 1e-15] = 0
    space = space or SiteSpace((V.shape[0],))
    return Operator(space, P, hermitian=True)


def check_isometry(V: np.ndarray, tol: float = 1e-10) -> None:
    dev = np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() if V.size else 0.0
    if dev > tol:
        raise ValueError(f"columns not orthonormal (deviation {dev:.3e})")


def block_compress(M, isometry: np.ndarray) -> np.ndarray:
    """V^dag M V."""
    V = np.asarray(isometry)
    check_isometry(V)
    m = _matrix_of(M)
    return V.conj().T @ (m @ V)


def orth(M: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span."""
    if M.shape[1] == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    return U[:, s > rtol * s[0]]


def connected_blocks(m) -> tuple[int, np.ndarray]:
    """Connected components of the sparsity graph of m (symmetry sectors
    whenever the conserved quantities are diagonal in the computational basis)."""
    from scipy.sparse.csgraph import connected_components

    a = as_sparse(m)
    a = (abs(a) > 0).astype(np.int8)
    return connected_components(a, directed=False)
