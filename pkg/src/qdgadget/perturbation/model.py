"""Full two-body model H = H0 + lam V on a lattice of code gadgets."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..gadget import Gadget, GadgetHamiltonianSpec, GroundSpace, ground_space, make_gadget
from ..groups import FiniteGroup
from ..lattice import DirectedLattice
from ..linalg import Operator, SiteSpace, embed, kron_all
from .bonds import bond_local, bond_terms

MAX_DENSE_DIM = 2 ** 20


class MemoryGuardError(MemoryError):
    pass


@dataclass
class PerturbedModel:
    lattice: DirectedLattice
    group: FiniteGroup
    variant: str
    lam: float = 0.0
    max_dim: int = MAX_DENSE_DIM
    gadget: Gadget = field(init=False, repr=False)
    ground: GroundSpace = field(init=False, repr=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        self.gadget = make_gadget(self.group, self.variant)
        self.ground = ground_space(GadgetHamiltonianSpec(self.variant), self.group)

    @property
    def d(self) -> int:
        return self.group.order

    @property
    def n_edges(self) -> int:
        return self.lattice.n_edges

    @property
    def E0(self) -> float:
        return self.n_edges * self.ground.energy

    @property
    def logical_dim(self) -> int:
        return self.d ** self.n_edges

    @property
    def total_dim(self) -> int:
        return self.gadget.N ** self.n_edges

    @property
    def space(self) -> SiteSpace:
        return SiteSpace.uniform(self.d, 4 * self.n_edges)

    def bond_terms(self, b):
        return bond_terms(self.group, self.variant, b.a.slot, b.b.slot)

    def _guard(self):
        if self.total_dim > self.max_dim:
            raise MemoryGuardError(
                f"physical dimension {self.total_dim} exceeds the dense cap {self.max_dim}; "
                f"use self_energy(..., mode='factorized') instead")

    # ---- dense / sparse physical operators

    @cached_property
    def H0(self) -> Operator:
        self._guard()
        space = self.space
        h = self.gadget.hamiltonian.matrix
        m = sp.csr_matrix((space.total_dim,) * 2, dtype=complex)
        for e in range(self.n_edges):
            m = m + embed(h, range(4 * e, 4 * e + 4), space).matrix
        return Operator(space, m, hermitian=True)

    @cached_property
    def V(self) -> Operator:
        self._guard()
        space = self.space
        m = sp.csr_matrix((space.total_dim,) * 2, dtype=complex)
        for b in self.lattice.bonds:
            m = m + embed(bond_local(self.group, self.variant, b.a.slot, b.b.slot),
                          [b.a.qudit, b.b.qudit], space).matrix
        return Operator(space, m, hermitian=True)

    @property
    def H(self) -> Operator:
        return self.H0 + self.V * self.lam

    @cached_property
    def codespace_isometry(self) -> np.ndarray:
        """tensor product of the per-gadget logical bases, edge 0 fastest on both sides."""
        self._guard()
        return kron_all([self.ground.basis] * self.n_edges)

    @cached_property
    def Upsilon(self) -> Operator:
        W = sp.csr_matrix(self.codespace_isometry)
        W.data[np.abs(W.data) < 1e-15] = 0
        W.eliminate_zeros()
        P = (W @ W.conj().T).tocsr()
        P.data[np.abs(P.data) < 1e-15] = 0
        P.eliminate_zeros()
        return Operator(self.space, (P + P.getH()) / 2, hermitian=True)

    def compress(self, M) -> np.ndarray:
        """W^dag M W on the logical space."""
        W = self.codespace_isometry
        m = M.matrix if isinstance(M, Operator) else M
        return W.conj().T @ (m @ W)

    def green_dense(self) -> np.ndarray:
        """G0(E0) = (E0 - H0)^-1 (1 - Upsilon) as a dense matrix (small models only)."""
        if self.total_dim > 4096:
            raise MemoryGuardError("dense Green's function limited to dimension 4096")
        h0 = self.H0.dense()
        w, U = np.linalg.eigh(h0)
        dE = self.E0 - w
        inv = np.where(np.abs(dE) > 1e-9, 1 / np.where(np.abs(dE) > 1e-9, dE, 1), 0.0)
        return (U * inv) @ U.conj().T


def assemble_model(lattice: DirectedLattice, group: FiniteGroup, variant: str = "general",
                   lam: float = 0.0, max_dim: int = MAX_DENSE_DIM) -> PerturbedModel:
    """Model record; physical matrices are built on first access, subject to ``max_dim``."""
    lattice.validate()
    return PerturbedModel(lattice, group, variant, lam, max_dim)
