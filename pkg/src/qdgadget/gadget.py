"""The 4-qudit code gadget: joint operators, the gadget Hamiltonian and its ground space.

Slots follow the corner layout of :mod:`qdgadget.lattice`: site 0..3 hold
q1 (TL), q2 (TR), q3 (BR), q4 (BL), with q1 fastest in the composite index.
Operators are sparse; the largest builtin gadget (D4, Q8) is 4096-dimensional
and its Hamiltonian splits into |G|^2 blocks labelled by (x2 x3, x1 x4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .groups import FiniteGroup, IrrepTable, irreps
from .linalg import Operator, SiteSpace, check_isometry

VARIANTS = ("toric", "cyclic", "general")
TORIC_NAMES = ("S_X", "S_Z", "X_G", "Z_G", "X_L", "Z_L")
CYCLIC_NAMES = ("S_L", "S_Z", "L_G", "Z_G", "L_L", "Z_L")
GENERAL_NAMES = ("L_L+", "L_L-", "T_L+", "T_L-", "L_G+", "L_G-", "T_G+", "T_G-",
                 "Z_L+", "Z_L-", "Z_G+", "Z_G-", "S_L", "S_T")

# (slot, sign) factors, multiplied left to right; sign -1 means x^-1
T_FACTORS = {
    "T_L+": ((1, 1), (2, 1)),
    "T_L-": ((3, -1), (0, -1)),
    "T_G+": ((0, -1), (1, 1)),
    "T_G-": ((2, 1), (3, -1)),
    "S_T": ((0, -1), (1, 1), (2, 1), (3, -1)),
}
# slot -> L sign
L_FACTORS = {
    "L_L+": {0: 1, 1: 1},
    "L_L-": {2: -1, 3: -1},
    "L_G-": {1: -1, 2: 1},
    "L_G+": {0: -1, 3: 1},
}
STABILIZERS = {"toric": ("S_X", "S_Z"), "cyclic": ("S_L", "S_Z"), "general": ("S_L", "S_T")}


class TheoremViolation(RuntimeError):
    """The gadget ground space fails degeneracy or stabilization."""


@dataclass(frozen=True)
class GadgetHamiltonianSpec:
    variant: str = "general"
    J_L: float = 1.0
    J_Z: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (self.J_L > 0 and self.J_Z > 0):
            raise ValueError("J_L and J_Z must be positive")


def _is_standard_cyclic(G: FiniteGroup) -> bool:
    d = G.order
    a = np.arange(d)
    return bool(np.array_equal(G.mult, (a[:, None] + a[None, :]) % d))


class Gadget:
    """Operator factory and solver for one code gadget."""

    def __init__(self, group: FiniteGroup, spec: GadgetHamiltonianSpec | None = None):
        spec = spec or GadgetHamiltonianSpec()
        if spec.variant == "toric" and not (group.order == 2 and _is_standard_cyclic(group)):
            raise ValueError("toric variant requires Z2")
        if spec.variant == "cyclic" and not _is_standard_cyclic(group):
            raise ValueError("cyclic variant requires a cyclic group Z_d in additive labelling")
        self.G = group
        self.spec = spec
        self.d = group.order
        self.space = SiteSpace.uniform(self.d, 4)
        self.N = self.space.total_dim
        self.x = self.space.digits(np.arange(self.N))  # (N, 4)

    @property
    def variant(self) -> str:
        return self.spec.variant

    @cached_property
    def table(self) -> IrrepTable:
        return irreps(self.G)

    # ---- primitive constructions

    def index(self, x) -> np.ndarray:
        """Composite index of (..., 4) slot values."""
        return np.asarray(x) @ self.space.strides

    def perm(self, maps: dict[int, np.ndarray]) -> sp.csr_matrix:
        """Permutation sending slot q value x_q to maps[q][x_q]."""
        y = self.x.copy()
        for q, m in maps.items():
            y[:, q] = m[self.x[:, q]]
        rows = self.index(y)
        return sp.csr_matrix((np.ones(self.N, complex), (rows, np.arange(self.N))), shape=(self.N, self.N))

    def l_map(self, g: int, sign: int) -> np.ndarray:
        G = self.G
        return G.mult[g] if sign > 0 else G.mult[:, G.inverse[g]]

    def product_values(self, factors) -> np.ndarray:
        """Per basis state, the group product of the listed (slot, sign) factors."""
        G = self.G
        acc = np.full(self.N, G.identity, dtype=np.int64)
        for q, s in factors:
            v = self.x[:, q] if s > 0 else G.inverse[self.x[:, q]]
            acc = G.mult[acc, v]
        return acc

    def diag(self, vals) -> sp.csr_matrix:
        return sp.diags(np.asarray(vals, dtype=complex)).tocsr()

    def local(self, mats: dict[int, np.ndarray]) -> sp.csr_matrix:
        """Tensor product of single-slot matrices (identity elsewhere)."""
        out = sp.identity(1, dtype=complex, format="csr")
        for q in range(4):
            m = mats.get(q)
            m = sp.identity(self.d, format="csr") if m is None else sp.csr_matrix(m)
            out = sp.kron(m, out, format="csr")
        return out

    def op(self, m, support=range(4), hermitian=False) -> Operator:
        return Operator(self.space, m, support, hermitian)

    # ---- cyclic / toric single-qudit pieces

    def Lc(self, k: int = 1) -> np.ndarray:
        return np.roll(np.eye(self.d), k % self.d, axis=0)

    def Zc(self, k: int = 1) -> np.ndarray:
        return np.diag(np.exp(2j * np.pi * k * np.arange(self.d) / self.d))

    # ---- named operators

    def operator(self, name: str, g: int | None = None, k: int = 1,
                 irrep: tuple[int, int, int] | None = None) -> Operator:
        v = self.variant
        if v == "toric":
            if name not in TORIC_NAMES:
                raise ValueError(f"{name!r} is not a toric gadget operator; expected one of {TORIC_NAMES}")
            X, Z = self.Lc(1), self.Zc(1)
            pat = {"S_X": "XXXX", "S_Z": "ZZZZ", "X_G": "IXXI", "Z_G": "ZZII",
                   "X_L": "XXII", "Z_L": "IZZI"}[name]
            mats = {q: (X if c == "X" else Z) for q, c in enumerate(pat) if c != "I"}
            return self.op(self.local(mats), mats.keys(), hermitian=True)
        if v == "cyclic":
            if name not in CYCLIC_NAMES:
                raise ValueError(f"{name!r} is not a cyclic gadget operator; expected one of {CYCLIC_NAMES}")
            L, Z = self.Lc, self.Zc
            mats = {
                "S_L": {0: L(k), 1: L(k), 2: L(-k), 3: L(-k)},
                "S_Z": {0: Z(k), 1: Z(-k), 2: Z(-k), 3: Z(k)},
                "L_G": {1: L(-k), 2: L(k)},
                "Z_G": {0: Z(-k), 1: Z(k)},
                "L_L": {0: L(k), 1: L(k)},
                "Z_L": {1: Z(k), 2: Z(k)},
            }[name]
            return self.op(self.local(mats), mats.keys())
        if name not in GENERAL_NAMES:
            raise ValueError(f"{name!r} is not a general gadget operator; expected one of {GENERAL_NAMES}")
        G = self.G
        if name in L_FACTORS:
            self._check_element(g)
            maps = {q: self.l_map(g, s) for q, s in L_FACTORS[name].items()}
            return self.op(self.perm(maps), maps.keys())
        if name == "S_L":
            if g is None:
                m = sum(self._S_L(h) for h in G.elements) / G.order
                return self.op(m, hermitian=True)
            self._check_element(g)
            return self.op(self._S_L(g))
        if name in T_FACTORS:
            g = G.identity if (g is None and name == "S_T") else g
            self._check_element(g)
            return self.op(self.diag(self.product_values(T_FACTORS[name]) == g),
                           [q for q, _ in T_FACTORS[name]], hermitian=True)
        # Z forms: pi(product)_ij with the T_ factor ordering
        if irrep is None:
            raise ValueError(f"{name} needs irrep=(p, i, j)")
        p, i, j = irrep
        if not 0 <= p < len(self.table) or not (0 <= i < self.table[p].dim and 0 <= j < self.table[p].dim):
            raise ValueError(f"invalid irrep entry {irrep}")
        fac = T_FACTORS["T" + name[1:]]
        vals = self.table[p].matrices[self.product_values(fac), i, j]
        return self.op(self.diag(vals), [q for q, _ in fac])

    def _check_element(self, g):
        if g is None or not 0 <= int(g) < self.G.order:
            raise ValueError(f"invalid group element {g}")

    def _S_L(self, g: int) -> sp.csr_matrix:
        gi = int(self.G.inverse[g])
        return self.perm({0: self.l_map(gi, -1), 1: self.l_map(gi, -1),
                          2: self.l_map(gi, 1), 3: self.l_map(gi, 1)})

    def stabilizers(self) -> dict[str, Operator]:
        return {n: self.operator(n) for n in STABILIZERS[self.variant]}

    def logical_operators(self) -> list[Operator]:
        """Generators of the logical algebra for the variant."""
        if self.variant == "toric":
            return [self.operator("X_L"), self.operator("Z_L")]
        if self.variant == "cyclic":
            return [self.operator("L_L"), self.operator("Z_L")]
        ops = []
        for g in self.G.elements:
            for n in ("L_L+", "L_L-", "T_L+", "T_L-"):
                ops.append(self.operator(n, g=g))
        return ops

    # ---- Hamiltonian

    @cached_property
    def hamiltonian(self) -> Operator:
        s, G = self.spec, self.G
        if self.variant == "toric":
            X, Z = self.Lc(1), self.Zc(1).real
            m = -s.J_L * (self.local({0: X, 3: X}) + self.local({1: X, 2: X})) \
                - s.J_Z * (self.local({0: Z, 1: Z}) + self.local({2: Z, 3: Z}))
        elif self.variant == "cyclic":
            d, L, Z = self.d, self.Lc, self.Zc
            m = sp.csr_matrix((self.N, self.N), dtype=complex)
            for k in range(d):
                m = m - (s.J_L / d) * (self.local({1: L(-k), 2: L(k)}) + self.local({0: L(-k), 3: L(k)}))
                m = m - (s.J_Z / d) * (self.local({0: Z(-k), 1: Z(k)}) + self.local({2: Z(k), 3: Z(-k)}))
        else:
            m = sp.csr_matrix((self.N, self.N), dtype=complex)
            for g in G.elements:
                m = m - (s.J_L / G.order) * (self.operator("L_G+", g=g).matrix + self.operator("L_G-", g=g).matrix)
            m = m - s.J_Z * (self.operator("T_G+", g=G.identity).matrix + self.operator("T_G-", g=G.identity).matrix)
        m = (m + m.getH()) / 2
        m.eliminate_zeros()
        return self.op(m, hermitian=True)

    def block_labels(self) -> np.ndarray:
        """Conserved (x2 x3, x1 x4) pair flattened to a single label."""
        G = self.G
        return G.mult[self.x[:, 1], self.x[:, 2]] * self.d + G.mult[self.x[:, 0], self.x[:, 3]]

    @cached_property
    def block_spectrum(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per block: (basis indices, eigenvalues, eigenvectors)."""
        H = self.hamiltonian.matrix
        lab = self.block_labels()
        r, c = H.nonzero()
        if np.any(lab[r] != lab[c]):
            raise RuntimeError("gadget Hamiltonian is not block diagonal in (x2 x3, x1 x4)")
        out = []
        for b in np.unique(lab):
            idx = np.flatnonzero(lab == b)
            sub = H[idx][:, idx].toarray()
            w, v = np.linalg.eigh(sub)
            out.append((idx, w, v))
        return out

    @cached_property
    def spectrum(self) -> np.ndarray:
        return np.sort(np.concatenate([w for _, w, _ in self.block_spectrum]))

    # ---- analytic bases

    def physical_index(self, h_a, h_b, k_G, k_L) -> int:
        G = self.G
        inv = G.inverse
        x = (h_a, G.mul(k_G, h_a), G.mul(inv[h_a], inv[k_G], k_L), G.mul(inv[h_b], inv[h_a], k_L))
        return int(self.index(np.array(x)))

    def physical_basis_state(self, h_a, h_b, k_G, k_L) -> np.ndarray:
        for g in (h_a, h_b, k_G, k_L):
            self._check_element(g)
        v = np.zeros(self.N, complex)
        v[self.physical_index(h_a, h_b, k_G, k_L)] = 1
        return v

    def _irrep_entry(self, p, i, j):
        if not 0 <= p < len(self.table):
            raise ValueError(f"invalid irrep index {p}")
        r = self.table[p]
        if not (0 <= i < r.dim and 0 <= j < r.dim):
            raise ValueError(f"irrep entry ({i},{j}) out of range for {r.label}")
        return r

    def element_basis_state(self, sigma, m, n, h, k_G, k_L) -> np.ndarray:
        """(sqrt(d_s)/sqrt|G|) sum_g sigma(g)_mn |g, g^-1 h g, k_G, k_L>."""
        r = self._irrep_entry(sigma, m, n)
        G = self.G
        v = np.zeros(self.N, complex)
        for g in G.elements:
            v[self.physical_index(g, G.mul(G.inv(g), h, g), k_G, k_L)] += r.matrices[g, m, n]
        return v * np.sqrt(r.dim / G.order)

    def rep_basis_state(self, sigma, m, n, h, pi, i, j, k_L) -> np.ndarray:
        """(sqrt(d_p d_s)/|G|) sum pi(gp gs)_ij sigma(gs)_mn |gs, gs^-1 h gs, gp, k_L>."""
        rs = self._irrep_entry(sigma, m, n)
        rp = self._irrep_entry(pi, i, j)
        G = self.G
        v = np.zeros(self.N, complex)
        for gs in G.elements:
            hb = G.mul(G.inv(gs), h, gs)
            for gp in G.elements:
                v[self.physical_index(gs, hb, gp, k_L)] += rp.matrices[G.mul(gp, gs), i, j] * rs.matrices[gs, m, n]
        return v * np.sqrt(rp.dim * rs.dim) / G.order

    def trivial_irrep(self) -> int:
        for p, r in enumerate(self.table):
            if r.dim == 1 and np.allclose(r.matrices[:, 0, 0], 1):
                return p
        raise ValueError("irrep table has no trivial irrep")

    def psi_plus(self, k_L: int) -> np.ndarray:
        """Normalized |I11,1,1,k_L> + |I11,1,I11,k_L>, phase fixed by a positive
        overlap with the element-basis component."""
        t, e = self.trivial_irrep(), self.G.identity
        a = self.element_basis_state(t, 0, 0, e, e, k_L)
        v = a + self.rep_basis_state(t, 0, 0, e, t, 0, 0, k_L)
        v /= np.linalg.norm(v)
        ph = np.vdot(a, v)
        return v * (abs(ph) / ph)

    # ---- ground space

    def ground_space(self, tol: float = 1e-9) -> "GroundSpace":
        spec = self.spectrum
        E0 = spec[0]
        deg = int(np.sum(spec < E0 + tol))
        higher = spec[spec >= E0 + tol]
        gap = float(higher[0] - E0) if higher.size else float("nan")
        if deg != self.d:
            raise TheoremViolation(f"ground degeneracy {deg} != |G| = {self.d} for {self.variant}/{self.G.name}")
        P_num = sp.csr_matrix((self.N, self.N), dtype=complex)
        for idx, w, v in self.block_spectrum:
            sel = w < E0 + tol
            if sel.any():
                u = np.zeros((self.N, int(sel.sum())), complex)
                u[idx] = v[:, sel]
                P_num = P_num + sp.csr_matrix(u @ u.conj().T)
        if self.spec.J_L == self.spec.J_Z:
            V = np.stack([self.psi_plus(k) for k in self.G.elements], axis=1)
        else:
            # closed form needs equal couplings; project the element-basis states instead
            t, e = self.trivial_irrep(), self.G.identity
            cols = []
            for k in self.G.elements:
                a = self.element_basis_state(t, 0, 0, e, e, k)
                v = P_num @ a
                v /= np.linalg.norm(v)
                ph = np.vdot(a, v)
                cols.append(v * (abs(ph) / ph))
            V = np.stack(cols, axis=1)
        check_isometry(V)
        H = self.hamiltonian.matrix
        res = np.abs(H @ V - E0 * V).max()
        if res > 1e-9:
            raise TheoremViolation(f"logical basis is not a ground eigenbasis (residual {res:.2e})")
        P_an = sp.csr_matrix(V @ V.conj().T)
        d = P_num - P_an
        proj_err = float(abs(d).max()) if d.nnz else 0.0
        stab = {}
        for n, S in self.stabilizers().items():
            SV = S.matrix @ V
            stab[n] = [complex(np.vdot(V[:, k], SV[:, k])) for k in range(self.d)]
            dev = max(abs(x - 1) for x in stab[n])
            if dev > 1e-9:
                raise TheoremViolation(f"<{n}> deviates from 1 by {dev:.2e}")
        return GroundSpace(self, V, E0, deg, gap, self.spectrum, stab, proj_err)


@dataclass
class GroundSpace:
    gadget: Gadget
    basis: np.ndarray  # (|G|^4, |G|), column k is the k_L state
    energy: float
    degeneracy: int
    gap: float
    spectrum: np.ndarray = field(repr=False)
    stabilizer_expectations: dict = field(default_factory=dict)
    projector_error: float = 0.0

    @property
    def group(self) -> FiniteGroup:
        return self.gadget.G

    @property
    def variant(self) -> str:
        return self.gadget.variant

    @property
    def projector(self) -> Operator:
        V = self.basis
        P = sp.csr_matrix(V @ V.conj().T)
        P.data[np.abs(P.data) < 1e-15] = 0
        P.eliminate_zeros()
        return Operator(self.gadget.space, (P + P.getH()) / 2, hermitian=True)

    def shift_adjusted_energy(self) -> float:
        """Toric energies mapped onto the cyclic d=2 normalization (H_cyc = -2 + H_tor / 2)."""
        return self.energy / 2 - 2 if self.variant == "toric" else self.energy

    def report(self) -> dict:
        return {
            "variant": self.variant,
            "group": self.group.name,
            "ground_energy": float(self.energy),
            "degeneracy": self.degeneracy,
            "stabilizer_expectations": {k: [float(np.real(x)) for x in v]
                                        for k, v in self.stabilizer_expectations.items()},
            "gap": self.gap,
        }


def logical_action(M, gs: GroundSpace) -> np.ndarray:
    """V^dag M V in the k_L frame (M an Operator, sparse or dense 4-qudit matrix)."""
    m = M.matrix if isinstance(M, Operator) else M
    V = gs.basis
    if m.shape != (V.shape[0], V.shape[0]):
        raise ValueError(f"operator shape {m.shape} does not match gadget dimension {V.shape[0]}")
    return V.conj().T @ (m @ V)


def classify_action(m: np.ndarray, tol: float = 1e-10) -> str:
    """'zero', 'scalar' (stabilizer or gauge-like) or 'logical'."""
    if np.abs(m).max() < tol:
        return "zero"
    c = np.trace(m) / m.shape[0]
    if np.abs(m - c * np.eye(m.shape[0])).max() < tol:
        return "scalar"
    return "logical"


# ---- basis families and closed-form overlaps


@dataclass(frozen=True)
class PhysicalLabel:
    h_a: int
    h_b: int
    k_G: int
    k_L: int


@dataclass(frozen=True)
class ElementLabel:
    sigma: int
    m: int
    n: int
    h: int
    k_G: int
    k_L: int


@dataclass(frozen=True)
class RepLabel:
    sigma: int
    m: int
    n: int
    h: int
    pi: int
    i: int
    j: int
    k_L: int


def basis_state(label, gadget: Gadget) -> np.ndarray:
    if isinstance(label, PhysicalLabel):
        return gadget.physical_basis_state(label.h_a, label.h_b, label.k_G, label.k_L)
    if isinstance(label, ElementLabel):
        return gadget.element_basis_state(label.sigma, label.m, label.n, label.h, label.k_G, label.k_L)
    if isinstance(label, RepLabel):
        return gadget.rep_basis_state(label.sigma, label.m, label.n, label.h, label.pi, label.i, label.j, label.k_L)
    raise TypeError(f"unknown basis label {label!r}")


def basis_inner_product(label1, label2, group: FiniteGroup) -> complex:
    """<label1 | label2> computed from the explicit state vectors."""
    g = _gadget(group)
    return complex(np.vdot(basis_state(label1, g), basis_state(label2, g)))


def overlap_closed_form(rep: RepLabel, el: ElementLabel, group: FiniteGroup) -> complex:
    """<sigma_mn,h,pi_ij,k_L | sigma'_m'n',h',k_G,k_L'> =
    sqrt(d_p d_s d_s')/|G|^{3/2} delta_hh' delta_kk' sum_g conj(pi(k_G g)_ij) conj(sigma(g)_mn) sigma'(g)_m'n'."""
    if rep.h != el.h or rep.k_L != el.k_L:
        return 0j
    t = irreps(group)
    P, S, S2 = t[rep.pi], t[rep.sigma], t[el.sigma]
    gs = np.arange(group.order)
    kg = group.mult[el.k_G, gs]
    s = np.sum(np.conj(P.matrices[kg, rep.i, rep.j]) * np.conj(S.matrices[gs, rep.m, rep.n])
               * S2.matrices[gs, el.m, el.n])
    return complex(np.sqrt(P.dim * S.dim * S2.dim) / group.order ** 1.5 * s)


def overlap_trivial_gauge(rep: RepLabel, el: ElementLabel, group: FiniteGroup) -> complex:
    """Gauge irrep trivial: 1/sqrt|G| when the sigma labels coincide, for every k_G."""
    same = (rep.h, rep.k_L, rep.sigma, rep.m, rep.n) == (el.h, el.k_L, el.sigma, el.m, el.n)
    return complex(same / np.sqrt(group.order))


def overlap_trivial_flux(rep: RepLabel, el: ElementLabel, group: FiniteGroup) -> complex:
    """sigma trivial in the bra: delta_{pi sigma'} delta_{j n'} conj(pi(k_G)_{i m'}) / sqrt|G|."""
    if rep.h != el.h or rep.k_L != el.k_L or rep.pi != el.sigma or rep.j != el.n:
        return 0j
    t = irreps(group)
    return complex(np.conj(t[rep.pi].matrices[el.k_G, rep.i, el.m]) / np.sqrt(group.order))


# ---- module-level API


@lru_cache(maxsize=32)
def _gadget_cached(group_key, spec: GadgetHamiltonianSpec, group: FiniteGroup) -> Gadget:
    return Gadget(group, spec)


def _gadget(group: FiniteGroup, spec: GadgetHamiltonianSpec | None = None) -> Gadget:
    spec = spec or GadgetHamiltonianSpec()
    return _gadget_cached((group.name, group.table_hash()), spec, group)


def make_gadget(group: FiniteGroup, variant: str = "general", J_L: float = 1.0, J_Z: float = 1.0) -> Gadget:
    return _gadget(group, GadgetHamiltonianSpec(variant, J_L, J_Z))


def gadget_operator(name: str, group: FiniteGroup, variant: str = "general", **params) -> Operator:
    return make_gadget(group, variant).operator(name, **params)


def gadget_hamiltonian(spec: GadgetHamiltonianSpec, group: FiniteGroup) -> Operator:
    return _gadget(group, spec).hamiltonian


def ground_space(spec: GadgetHamiltonianSpec, group: FiniteGroup) -> GroundSpace:
    g = _gadget(group, spec)
    if "_gs" not in g.__dict__:
        g._gs = g.ground_space()
    return g._gs


def expected_ground_energy(order: int) -> float:
    return -2 * (1 + 1 / np.sqrt(order))
