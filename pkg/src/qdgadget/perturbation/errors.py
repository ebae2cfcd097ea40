"""Scans of two-corner error operators compressed to a gadget's ground space.

Corner operators use the corner table signs: Z_{Z_SIGN[q]}^{pi_ij} and
L_{L_SIGN[q]}^g.  Classes (slots q1..q4 = TL, TR, BR, BL):

    z_a  Z^{pi_ij} q1, Z^{sigma_kl} q2    vanishes unless pi = sigma and i = l
    z_b  Z^{sigma_kl} q3, Z^{pi_ij} q4    vanishes unless pi = sigma and j = k
    z_c  Z^{pi_ij} q2, Z^{sigma_kl} q3    vanishes unless pi = sigma and j = k
    z_d  Z^{pi_ij} q1, Z^{sigma_kl} q4    vanishes unless pi = sigma and i = l
    l_a  L^g q1, L^g' q2                  survives iff g = g'
    l_b  L^g' q3, L^g q4                  survives iff g = g'
    l_c  L^g q2, L^g' q3                  column k survives iff g = k g' k^-1
    l_d  L^g q1, L^g' q4                  column k survives iff g = k g' k^-1
    mixed  Z^{pi_ij} q, L^g q'            survives iff pi trivial and g = 1
    diagonal  pairs (q1, q3), (q2, q4)    classified only

When a z rule holds, the error equals the index-averaged form
(1/d_pi) sum_m Z^{pi_.m} Z^{pi_m.} in the ground space; that form is checked and
decides survival (for z_a / z_b it carries the frozen gauge label and can
still vanish).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..gadget import classify_action, make_gadget
from ..groups import FiniteGroup, irreps
from ..lattice import CORNER_NAMES, L_SIGN, Z_SIGN
from ..qd import L_op, Z_op

VANISH_TOL = 1e-12
SURVIVE_TOL = 1e-3


class ErrorScanMismatch(AssertionError):
    pass


@dataclass
class ErrorTuple:
    cls: str
    params: tuple
    norm: float
    predicted_vanishing: bool | None
    observed_vanishing: bool | None
    classification: str = ""

    @property
    def ok(self) -> bool:
        if self.predicted_vanishing is None:
            return True
        return self.observed_vanishing is not None and self.predicted_vanishing == self.observed_vanishing


@dataclass
class ErrorScanReport:
    group: str
    variant: str
    tuples: list[ErrorTuple] = field(default_factory=list)
    averaged_form_error: float = 0.0

    def by_class(self) -> dict[str, dict]:
        out: dict[str, dict] = {}
        for t in self.tuples:
            d = out.setdefault(t.cls, {"scanned": 0, "vanishing": 0, "surviving": 0, "mismatches": 0,
                                       "max_vanishing_norm": 0.0, "min_surviving_norm": None})
            d["scanned"] += 1
            if t.observed_vanishing:
                d["vanishing"] += 1
                d["max_vanishing_norm"] = max(d["max_vanishing_norm"], t.norm)
            elif t.observed_vanishing is False:
                d["surviving"] += 1
                m = d["min_surviving_norm"]
                d["min_surviving_norm"] = t.norm if m is None else min(m, t.norm)
            if not t.ok:
                d["mismatches"] += 1
        return out

    @property
    def passed(self) -> bool:
        return all(t.ok for t in self.tuples) and self.averaged_form_error < 1e-10

    def mismatches(self) -> list[ErrorTuple]:
        return [t for t in self.tuples if not t.ok]


def _observe(norm: float) -> bool | None:
    if norm < VANISH_TOL:
        return True
    if norm > SURVIVE_TOL:
        return False
    return None


def error_scan(group: FiniteGroup, variant: str = "general", strict: bool = True) -> ErrorScanReport:
    gad = make_gadget(group, variant)
    gs = gad.ground_space()
    V = gs.basis
    G = group
    t = irreps(G)
    entries = list(t.entries())
    triv = gad.trivial_irrep()
    ident = G.identity

    def zmat(q, e):
        return Z_op(t, e[0], e[1], e[2], Z_SIGN[q])

    def lmat(q, g):
        return L_op(G, g, L_SIGN[q])

    cache: dict = {}

    def single(q, kind, par):
        key = (q, kind, par)
        if key not in cache:
            m = zmat(q, par) if kind == "Z" else lmat(q, par)
            cache[key] = gad.local({q: m})
        return cache[key]

    def compress(qa, ka, pa, qb, kb, pb):
        W = single(qb, kb, pb) @ V
        W = single(qa, ka, pa) @ W
        return V.conj().T @ W

    rep = ErrorScanReport(G.name, variant)

    def add(cls, params, m, pred, per_column=False):
        if per_column:
            for k in range(m.shape[1]):
                nrm = float(np.linalg.norm(m[:, k]))
                rep.tuples.append(ErrorTuple(cls, params + (("k", k),), nrm, pred(k), _observe(nrm)))
        else:
            nrm = float(np.linalg.norm(m, 2))
            rep.tuples.append(ErrorTuple(cls, params, nrm, pred, _observe(nrm), classify_action(m)))

    def reduced(cls, a, b):
        """index-averaged form the error reduces to when the rule holds"""
        p = a[0]
        dp = t[p].dim
        if cls == "z_a":
            terms = [(0, (p, mm, a[2]), 1, (p, b[1], mm)) for mm in range(dp)]
        elif cls == "z_c":
            terms = [(1, (p, a[1], mm), 2, (p, mm, b[2])) for mm in range(dp)]
        elif cls == "z_d":
            terms = [(0, (p, mm, a[2]), 3, (p, b[1], mm)) for mm in range(dp)]
        else:  # z_b: a = sigma on q3, b = pi on q4
            terms = [(2, (p, mm, a[2]), 3, (p, b[1], mm)) for mm in range(dp)]
        return sum(compress(qa, "Z", ea, qb, "Z", eb) for qa, ea, qb, eb in terms) / dp

    zclasses = {
        "z_a": ((0, 1), lambda a, b: a[0] == b[0] and a[1] == b[2], ("pi", "sigma")),
        "z_b": ((2, 3), lambda a, b: a[0] == b[0] and b[2] == a[1], ("sigma", "pi")),
        "z_c": ((1, 2), lambda a, b: a[0] == b[0] and a[2] == b[1], ("pi", "sigma")),
        "z_d": ((0, 3), lambda a, b: a[0] == b[0] and a[1] == b[2], ("pi", "sigma")),
    }
    for cls, ((qa, qb), rule, names) in zclasses.items():
        for a, b in product(entries, repeat=2):
            m = compress(qa, "Z", a, qb, "Z", b)
            pred = True
            if rule(a, b):
                r = reduced(cls, a, b)
                rep.averaged_form_error = max(rep.averaged_form_error, float(np.abs(r - m).max()))
                pred = bool(np.linalg.norm(r, 2) < VANISH_TOL)
            add(cls, ((names[0], a), (names[1], b)), m, pred)
    for g, h in product(G.elements, repeat=2):
        add("l_a", (("g", g), ("g'", h)), compress(0, "L", g, 1, "L", h), g != h)
        add("l_b", (("g'", h), ("g", g)), compress(2, "L", h, 3, "L", g), g != h)
        rule = lambda k, g=g, h=h: g != G.mul(k, h, G.inv(k))
        add("l_c", (("g", g), ("g'", h)), compress(1, "L", g, 2, "L", h), rule, per_column=True)
        add("l_d", (("g", g), ("g'", h)), compress(0, "L", g, 3, "L", h), rule, per_column=True)
    for qz, ql in product(range(4), repeat=2):
        if qz == ql:
            continue
        for e, g in product(entries, G.elements):
            m = compress(qz, "Z", e, ql, "L", g)
            add("mixed", (("Z", CORNER_NAMES[qz], e), ("L", CORNER_NAMES[ql], g)), m,
                not (e[0] == triv and g == ident))
    for qa, qb in ((0, 2), (1, 3)):
        pars = [("Z", e) for e in entries] + [("L", g) for g in G.elements]
        for (ka, pa), (kb, pb) in product(pars, repeat=2):
            m = compress(qa, ka, pa, qb, kb, pb)
            add("diagonal", ((ka, CORNER_NAMES[qa], pa), (kb, CORNER_NAMES[qb], pb)), m, None)
    if strict and not rep.passed:
        bad = rep.mismatches()
        msg = f"{len(bad)} error tuples disagree with the vanishing conditions"
        if bad:
            b = bad[0]
            msg += f"; first: {b.cls} {b.params} norm={b.norm:.3e} predicted_vanishing={b.predicted_vanishing}"
        if rep.averaged_form_error >= 1e-10:
            msg += f"; z averaged-form error {rep.averaged_form_error:.2e}"
        raise ErrorScanMismatch(msg)
    return rep
