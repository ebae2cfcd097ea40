"""Bond terms V(b) between corners of neighbouring gadgets."""

from __future__ import annotations

import numpy as np

from ..groups import FiniteGroup, irreps
from ..lattice import L_SIGN, Z_SIGN, Bond
from ..linalg import Operator, SiteSpace
from ..qd import L_op, Z_op, cyclic_L, cyclic_Z


def bond_terms(group: FiniteGroup, variant: str, slot_a: int, slot_b: int) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """V(b) = sum_alpha c_alpha A_alpha (x) B_alpha with A on corner a, B on corner b.

    The L sign of both corners and the Z sign of each corner follow the corner
    table; the two corners must share an L sign and carry opposite Z signs.
    """
    la, lb = L_SIGN[slot_a], L_SIGN[slot_b]
    za, zb = Z_SIGN[slot_a], Z_SIGN[slot_b]
    if la != lb or za == zb:
        raise ValueError(f"corners {slot_a} and {slot_b} cannot share a bond (sign table mismatch)")
    d = group.order
    if variant == "toric":
        X, Z = cyclic_L(2), cyclic_Z(2).real
        return [(-1.0, X, X), (-1.0, Z, Z)]
    if variant == "cyclic":
        out = [(-1.0, np.linalg.matrix_power(cyclic_L(d), k), np.linalg.matrix_power(cyclic_L(d), k)) for k in range(d)]
        Z = cyclic_Z(d)
        out += [(-1.0, np.linalg.matrix_power(Z, k), np.linalg.matrix_power(Z.conj(), k)) for k in range(d)]
        return out
    if variant != "general":
        raise ValueError(f"unknown variant {variant!r}")
    t = irreps(group)
    out = [(-1.0, L_op(group, g, la), L_op(group, g, la)) for g in group.elements]
    for p, r in enumerate(t):
        for k in range(r.dim):
            for m in range(r.dim):
                out.append((-float(r.dim), Z_op(t, p, k, m, za), Z_op(t, p, m, k, zb)))
    return out


def bond_local(group: FiniteGroup, variant: str, slot_a: int, slot_b: int) -> np.ndarray:
    """Dense |G|^2 matrix on (corner a, corner b), corner a fastest."""
    return sum(c * np.kron(B, A) for c, A, B in bond_terms(group, variant, slot_a, slot_b))


def bond_term(b: Bond, group: FiniteGroup, variant: str, space: SiteSpace | None = None) -> Operator:
    """V(b) as an Operator on the full physical space (or on the two bond qudits if no space)."""
    from ..linalg import embed

    m = bond_local(group, variant, b.a.slot, b.b.slot)
    if space is None:
        return Operator(SiteSpace.uniform(group.order, 2), m, hermitian=True)
    return embed(m, [b.a.qudit, b.b.qudit], space, hermitian=True)
