"""Finite groups with dense integer elements and curated unitary irrep tables.

Elements are indices ``0..|G|-1`` and index 0 is always the identity.
Multiplication is ``mult[a, b] = a*b``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from pathlib import Path

import numpy as np

ALGEBRA_TOL = 1e-12


class GroupAxiomError(ValueError):
    """A multiplication table violates a group axiom."""


class IrrepTableError(ValueError):
    """An irrep table is incomplete, non-unitary or non-orthogonal."""


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mult: np.ndarray
    name: str = "G"

    def __post_init__(self):
        mult = np.asarray(self.mult, dtype=np.int64)
        object.__setattr__(self, "mult", mult)
        mult.setflags(write=False)
        _check_axioms(mult)

    @property
    def order(self) -> int:
        return self.mult.shape[0]

    @property
    def identity(self) -> int:
        return 0

    @property
    def elements(self) -> range:
        return range(self.order)

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.argmin(self.mult, axis=1)
        inv.setflags(write=False)
        return inv

    def mul(self, *gs: int) -> int:
        out = 0
        for g in gs:
            out = int(self.mult[out, g])
        return out

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    def conj(self, g: int, h: int) -> int:
        """g h g^-1."""
        return self.mul(g, h, self.inv(g))

    @cached_property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    @cached_property
    def conjugacy_classes(self) -> list[tuple[int, ...]]:
        seen: set[int] = set()
        classes = []
        for h in self.elements:
            if h in seen:
                continue
            cl = tuple(sorted({self.conj(g, h) for g in self.elements}))
            seen.update(cl)
            classes.append(cl)
        return classes

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != 0:
            x = int(self.mult[x, g])
            k += 1
        return k

    def table_hash(self) -> str:
        return hashlib.sha256(self.mult.tobytes()).hexdigest()[:16]


def _check_axioms(mult: np.ndarray) -> None:
    if mult.ndim != 2 or mult.shape[0] != mult.shape[1] or mult.shape[0] < 1:
        raise GroupAxiomError("closure: table must be square and non-empty")
    n = mult.shape[0]
    if mult.min() < 0 or mult.max() >= n:
        raise GroupAxiomError("closure: entry outside 0..|G|-1")
    ar = np.arange(n)
    if not (np.array_equal(mult[0], ar) and np.array_equal(mult[:, 0], ar)):
        raise GroupAxiomError("identity: element 0 is not a two-sided identity")
    for row in mult:
        if len(set(row.tolist())) != n:
            raise GroupAxiomError("inverse: some row is not a permutation")
    # (ab)c == a(bc) for all triples
    if not np.array_equal(mult[mult], mult[:, mult]):
        raise GroupAxiomError("associativity: (ab)c != a(bc) for some triple")
    inv = np.argmin(mult, axis=1)
    if not np.all(mult[inv, ar] == 0):
        raise GroupAxiomError("inverse: left and right inverses differ")


@dataclass(frozen=True, eq=False)
class Irrep:
    label: str
    matrices: np.ndarray  # (|G|, d, d)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __call__(self, g: int) -> np.ndarray:
        return self.matrices[g]

    @property
    def character(self) -> np.ndarray:
        return np.trace(self.matrices, axis1=1, axis2=2)


@dataclass(frozen=True, eq=False)
class IrrepTable:
    group: FiniteGroup
    irreps: tuple[Irrep, ...]
    validated: bool = field(default=True)

    def __iter__(self):
        return iter(self.irreps)

    def __len__(self):
        return len(self.irreps)

    def __getitem__(self, i) -> Irrep:
        return self.irreps[i]

    def index(self, label: str) -> int:
        for i, r in enumerate(self.irreps):
            if r.label == label:
                return i
        raise KeyError(label)

    @property
    def dims(self) -> list[int]:
        return [r.dim for r in self.irreps]

    def entries(self):
        """All (irrep index, i, j) triples."""
        for p, r in enumerate(self.irreps):
            for i, j in product(range(r.dim), repeat=2):
                yield p, i, j

    def table_hash(self) -> str:
        h = hashlib.sha256()
        for r in self.irreps:
            h.update(np.round(r.matrices, 12).tobytes())
        return h.hexdigest()[:16]


def verify_orthogonality(table: IrrepTable) -> float:
    """Max deviation of the grand orthogonality relation
    sum_g conj(pi(g)_ij) sigma(g)_kl = |G|/d_pi delta_{pi sigma} delta_ik delta_jl."""
    n = table.group.order
    worst = 0.0
    for a, ra in enumerate(table.irreps):
        for b, rb in enumerate(table.irreps):
            s = np.einsum("gij,gkl->ijkl", ra.matrices.conj(), rb.matrices)
            if a == b:
                d = ra.dim
                eye = np.eye(d)
                s = s - (n / d) * np.einsum("ik,jl->ijkl", eye, eye)
            worst = max(worst, float(np.abs(s).max()))
    return worst


def validate_irreps(table: IrrepTable, tol: float = ALGEBRA_TOL) -> None:
    G = table.group
    total = sum(r.dim**2 for r in table.irreps)
    if total != G.order:
        raise IrrepTableError(f"incomplete table: sum d^2 = {total} != |G| = {G.order}")
    for r in table.irreps:
        m = r.matrices
        hom = np.abs(np.einsum("aij,bjk->abik", m, m) - m[G.mult]).max()
        uni = np.abs(np.einsum("aij,akj->aik", m, m.conj()) - np.eye(r.dim)).max()
        irr = abs(np.sum(np.abs(r.character) ** 2) / G.order - 1)
        dev = max(hom, uni, irr)
        if dev > tol:
            raise IrrepTableError(f"irrep {r.label}: max deviation {dev:.3e}")
    dev = verify_orthogonality(table)
    if dev > tol:
        raise IrrepTableError(f"grand orthogonality fails: max deviation {dev:.3e}")


# ---------------------------------------------------------------- constructors


def cyclic(d: int) -> FiniteGroup:
    if d < 2:
        raise ValueError("cyclic group needs d >= 2")
    ar = np.arange(d)
    return FiniteGroup((ar[:, None] + ar[None, :]) % d, name=f"Z{d}")


def _closure(gens: list[np.ndarray]) -> list[np.ndarray]:
    """BFS closure of matrix generators, identity first."""
    eye = np.eye(gens[0].shape[0], dtype=gens[0].dtype)
    elems = [eye]
    keys = {_key(eye)}
    frontier = [eye]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x @ g
                k = _key(y)
                if k not in keys:
                    keys.add(k)
                    elems.append(y)
                    nxt.append(y)
        frontier = nxt
    return elems


def _key(m: np.ndarray) -> bytes:
    return (np.round(m, 8) + 0.0).astype(complex).tobytes()


def _from_faithful(name: str, gens: list[np.ndarray]):
    """Group and word map from a faithful matrix representation."""
    elems = _closure(gens)
    index = {_key(m): i for i, m in enumerate(elems)}
    n = len(elems)
    mult = np.array([[index[_key(elems[a] @ elems[b])] for b in range(n)] for a in range(n)])
    return FiniteGroup(mult, name=name), elems, index


def _image_table(elems, faithful_gens, images):
    """Extend generator images to every element by replaying BFS words."""
    n = len(elems)
    out: list = [None] * n
    out[0] = np.eye(images[0].shape[0], dtype=complex)
    index = {_key(m): i for i, m in enumerate(elems)}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for g, im in zip(faithful_gens, images):
                j = index[_key(elems[i] @ g)]
                if out[j] is None:
                    out[j] = out[i] @ im
                    nxt.append(j)
        frontier = nxt
    return np.array(out, dtype=complex)


def _perm(p) -> np.ndarray:
    m = np.zeros((len(p), len(p)))
    for i, pi in enumerate(p):
        m[pi, i] = 1
    return m


_c3 = np.cos(2 * np.pi / 3)
_s3 = np.sin(2 * np.pi / 3)

# Curated tables: each builtin is a faithful generator set plus the generator
# images of every irrep; full tables are replayed from BFS words and validated.
_BUILTIN = {
    "S3": dict(
        gens=[_perm([1, 2, 0]), _perm([1, 0, 2])],
        irreps={
            "A1": [[[1]], [[1]]],
            "A2": [[[1]], [[-1]]],
            "E": [[[_c3, -_s3], [_s3, _c3]], [[1, 0], [0, -1]]],
        },
    ),
    "D4": dict(
        gens=[_perm([1, 2, 3, 0]), _perm([0, 3, 2, 1])],
        irreps={
            "A1": [[[1]], [[1]]],
            "A2": [[[1]], [[-1]]],
            "B1": [[[-1]], [[1]]],
            "B2": [[[-1]], [[-1]]],
            "E": [[[0, -1], [1, 0]], [[1, 0], [0, -1]]],
        },
    ),
    "Q8": dict(
        gens=[np.array([[1j, 0], [0, -1j]]), np.array([[0, 1], [-1, 0]], dtype=complex)],
        irreps={
            "A1": [[[1]], [[1]]],
            "A2": [[[1]], [[-1]]],
            "B1": [[[-1]], [[1]]],
            "B2": [[[-1]], [[-1]]],
            "E": [[[1j, 0], [0, -1j]], [[0, 1], [-1, 0]]],
        },
    ),
}

_registry: dict[int, IrrepTable] = {}


def builtin(name: str) -> FiniteGroup:
    if name not in _BUILTIN:
        raise ValueError(f"unknown builtin group {name!r}; choose from {sorted(_BUILTIN)}")
    spec = _BUILTIN[name]
    G, elems, _ = _from_faithful(name, spec["gens"])
    irs = tuple(
        Irrep(label, _image_table(elems, spec["gens"], [np.array(m, dtype=complex) for m in ims]))
        for label, ims in spec["irreps"].items()
    )
    table = IrrepTable(G, irs)
    validate_irreps(table)
    _registry[id(G)] = table
    return G


def from_table_file(path: str | Path) -> FiniteGroup:
    data = json.loads(Path(path).read_text())
    n = int(data["order"])
    mult = np.asarray(data["mult"], dtype=np.int64)
    if mult.size != n * n:
        raise GroupAxiomError(f"closure: mult has {mult.size} entries, expected {n * n}")
    return FiniteGroup(mult.reshape(n, n), name=data.get("name", f"table{n}"))


def make_group(spec: str | int | FiniteGroup) -> FiniteGroup:
    """Accepts a FiniteGroup, an int d (cyclic), ``"Z3"``, ``"cyclic(3)"``,
    a builtin name, or a path to a JSON table (``table:path`` or a ``.json`` path)."""
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, (int, np.integer)):
        return cyclic(int(spec))
    s = spec.strip()
    if s.startswith("cyclic(") and s.endswith(")"):
        return cyclic(int(s[7:-1]))
    if s[0] in "Zz" and s[1:].isdigit():
        return cyclic(int(s[1:]))
    if s.startswith("table:"):
        return from_table_file(s[6:])
    if s.endswith(".json"):
        return from_table_file(s)
    return builtin(s)


def irreps(group: FiniteGroup) -> IrrepTable:
    """Complete unitary irrep table. Cyclic groups use pi_k(j) = omega^{kj};
    builtins use curated tables; other abelian tables are diagonalized."""
    if id(group) in _registry:
        return _registry[id(group)]
    n = group.order
    gen = _cyclic_generator(group)
    if gen is not None:
        # element g = gen^{e(g)}
        expo = np.zeros(n, dtype=int)
        x = 0
        for k in range(n):
            expo[x] = k
            x = int(group.mult[x, gen])
        omega = np.exp(2j * np.pi / n)
        irs = tuple(Irrep(f"k{k}", (omega ** (k * expo))[:, None, None]) for k in range(n))
    elif group.is_abelian:
        irs = _abelian_characters(group)
    else:
        raise IrrepTableError(
            f"no irrep table for non-abelian group {group.name}; use a builtin (S3, D4, Q8)"
        )
    table = IrrepTable(group, irs)
    validate_irreps(table)
    _registry[id(group)] = table
    return table


def _cyclic_generator(group: FiniteGroup) -> int | None:
    if not group.is_abelian:
        return None
    if group.name.startswith("Z") and group.name[1:].isdigit() and group.order > 1:
        if group.element_order(1) == group.order:
            return 1
    for g in group.elements:
        if group.element_order(g) == group.order:
            return g
    return None


def _abelian_characters(group: FiniteGroup) -> tuple[Irrep, ...]:
    n = group.order
    rng = np.random.default_rng(0)
    reg = np.zeros((n, n, n))
    for g in group.elements:
        reg[g, group.mult[g], np.arange(n)] = 1
    M = np.einsum("g,gij->ij", rng.normal(size=n) + 1j * rng.normal(size=n), reg)
    _, vecs = np.linalg.eig(M)
    chars = []
    for v in vecs.T:
        v = v / v[0] if abs(v[0]) > 1e-9 else v
        chi = np.array([np.vdot(v, reg[g] @ v) / np.vdot(v, v) for g in group.elements])
        chars.append(chi)
    chars.sort(key=lambda c: (np.round(np.angle(c) % (2 * np.pi), 9)).tolist())
    return tuple(Irrep(f"chi{i}", c[:, None, None]) for i, c in enumerate(chars))


def register_irreps(table: IrrepTable) -> None:
    """Attach an externally supplied table to its group after validation."""
    validate_irreps(table)
    _registry[id(table.group)] = table
