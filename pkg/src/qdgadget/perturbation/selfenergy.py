"""Self-energy orders Sigma^(n) = lam^n Upsilon V (G0(E0) V)^(n-1) Upsilon on the logical space."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .levelnet import assemble_logical, factorized_coefficients
from .model import MemoryGuardError, PerturbedModel
from .sectors import brute_force, direct_gram, sector_reduced

MAX_LOGICAL_DIM = 6 ** 4
MODES = ("factorized", "full", "brute", "direct")


@dataclass
class SelfEnergy:
    order: int
    E0: float
    lam: float
    coefficient: np.ndarray  # lambda-free Upsilon V (G0 V)^(n-1) Upsilon
    mode: str
    record: dict = field(default_factory=dict)

    @property
    def logical_matrix(self) -> np.ndarray:
        return self.lam ** self.order * self.coefficient

    def hermiticity_error(self) -> float:
        c = self.coefficient
        return float(np.abs(c - c.conj().T).max())

    def trivial_part(self) -> complex:
        return complex(np.trace(self.coefficient) / self.coefficient.shape[0])

    def nontrivial_norm(self) -> float:
        """Largest entry of the coefficient after removing its identity component."""
        c = self.coefficient
        return float(np.abs(c - self.trivial_part() * np.eye(c.shape[0])).max())


def self_energy(model: PerturbedModel, n: int, mode: str = "factorized", seed: int = 0) -> SelfEnergy:
    """``factorized``: per-gadget level-resolved factors (any group, any n);
    ``full``: symmetry-sector reduced exact evaluation (abelian groups, n <= 4);
    ``brute``: complete gadget eigenbasis product (small patches);
    ``direct``: sparse computational basis with a block-diagonalised Green's
    function (any group, at most a few bonded gadgets, n <= 4)."""
    if n < 1:
        raise ValueError("order must be >= 1")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if model.logical_dim > MAX_LOGICAL_DIM:
        raise MemoryGuardError(f"logical dimension {model.logical_dim} exceeds {MAX_LOGICAL_DIM}")
    if mode != "factorized" and n > 4:
        raise ValueError("full-matrix modes are limited to n <= 4")
    gaps = model.ground.gap
    if not np.isfinite(gaps) or gaps < 1e-9:
        raise ValueError("unperturbed ground band is not separated from the excited states")
    record: dict = {"green_function": "G0(E0) = (E0 - H0)^-1 (1 - Upsilon)", "E0": model.E0,
                    "gadget_gap": gaps}
    K = model.d
    if mode == "factorized":
        total, edges, mus, rec = factorized_coefficients(model, n)
        coef = assemble_logical(total, edges, mus, model.n_edges, K)
        record.update(rec)
    elif mode == "full":
        coef = sector_reduced(model, n, seed=seed)
    elif mode == "brute":
        coef = brute_force(model, n)
    else:
        coef = direct_gram(model, n)
    se = SelfEnergy(n, model.E0, model.lam, coef, mode, record)
    err = se.hermiticity_error()
    record["hermiticity_error"] = err
    if err > 1e-10 * max(1.0, float(np.abs(coef).max())):
        raise RuntimeError(f"self energy not Hermitian (error {err:.2e})")
    return se
