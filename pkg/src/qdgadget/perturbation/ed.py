"""Exact diagonalization sweeps of H0 + lam V against the effective Hamiltonian."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..linalg import ConvergenceError, connected_blocks
from .model import PerturbedModel
from .selfenergy import self_energy

SWEEP_COLUMNS = ("lambda", "E_ground", "band_width", "slope_window", "eff_residual")


@dataclass
class SweepRow:
    lam: float
    E_ground: float = float("nan")
    band_width: float = float("nan")
    slope_window: float = float("nan")
    eff_residual: float = float("nan")
    band: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None


@dataclass
class SweepTable:
    rows: list[SweepRow]
    n_low: int
    sectors: int
    meta: dict = field(default_factory=dict)

    def fit_slope(self, lam_min: float = 0.0) -> float:
        """log-log regression of the low-band width against lambda."""
        x = [(r.lam, r.band_width) for r in self.rows
             if r.error is None and r.lam > lam_min and r.band_width > 0]
        if len(x) < 2:
            return float("nan")
        lx, ly = np.log([a for a, _ in x]), np.log([b for _, b in x])
        return float(np.polyfit(lx, ly, 1)[0])

    def residual_slopes(self) -> list[float]:
        """Local log-slopes of eff_residual between consecutive lambda (ratio test)."""
        rs = [r for r in self.rows if r.error is None and r.lam > 0 and r.eff_residual > 0]
        return [float(np.log(b.eff_residual / a.eff_residual) / np.log(b.lam / a.lam))
                for a, b in zip(rs, rs[1:])]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(SWEEP_COLUMNS + ("error",))
            for r in self.rows:
                w.writerow([repr(r.lam), repr(r.E_ground), repr(r.band_width), repr(r.slope_window),
                            repr(r.eff_residual), r.error or ""])

    def plotdata(self, path: str | Path, column: str = "band_width") -> None:
        with open(path, "w") as f:
            f.write(f"# lambda {column}\n")
            for r in self.rows:
                f.write(f"{r.lam!r} {getattr(r, column)!r}\n")


def _sector_eigs(h: sp.csr_matrix, k: int, seed: int) -> np.ndarray:
    n = h.shape[0]
    if n <= 512 or k >= n - 1:
        return np.linalg.eigvalsh(h.toarray())[:k]
    v0 = np.random.default_rng(seed).normal(size=n)
    try:
        w = spla.eigsh(h, k=k, which="SA", v0=v0, tol=0, ncv=max(2 * k + 1, 30), maxiter=50 * n,
                       return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("Lanczos did not converge", float("inf")) from exc
    return np.sort(w)


def ed_sweep(model: PerturbedModel, lambdas, mode: str = "brute", seed: int = 0,
             sigma: dict | None = None) -> SweepTable:
    """Lowest band of H0 + lam V per lambda, split into computational-basis symmetry sectors.

    The prediction is E0 + lam^2 Sigma2 + lam^4 Sigma4 (coefficients from ``mode``); the
    residual compares the two bands after removing their means.
    """
    H0 = model.H0.matrix.tocsr()
    V = model.V.matrix.tocsr()
    n_sec, lab = connected_blocks(abs(H0) + abs(V))
    ups = np.real(model.Upsilon.matrix.diagonal())
    sectors = []
    for s in range(n_sec):
        idx = np.flatnonzero(lab == s)
        n_low = int(round(ups[idx].sum()))
        if n_low:
            sectors.append((idx, n_low, H0[idx][:, idx], V[idx][:, idx]))
    n_low = sum(s[1] for s in sectors)
    if n_low != model.logical_dim:
        raise RuntimeError("codespace is not a union of sector subspaces")
    sig = sigma or {n: self_energy(model, n, mode) for n in (2, 4)}
    rows = []
    prev = None
    for lam in lambdas:
        lam = float(lam)
        row = SweepRow(lam)
        try:
            low, gaps = [], []
            for i, (idx, nl, h0, v) in enumerate(sectors):
                w = _sector_eigs((h0 + lam * v).tocsr(), nl + 1, seed + i)
                low.append(w[:nl])
                if len(w) > nl:
                    gaps.append(w[nl])
            band = np.sort(np.concatenate(low))
            if gaps and min(gaps) <= band[-1]:
                raise ConvergenceError("low band not separated from excited states", 0.0)
            row.band = band
            row.E_ground = float(band[0])
            row.band_width = float(band[-1] - band[0])
            eff = model.E0 * np.eye(model.logical_dim) + lam ** 2 * sig[2].coefficient + lam ** 4 * sig[4].coefficient
            ev = np.linalg.eigvalsh((eff + eff.conj().T) / 2)
            row.eff_residual = float(np.abs((band - band.mean()) - (ev - ev.mean())).max())
            if prev is not None and prev.band_width > 0 and row.band_width > 0 and lam > 0 and prev.lam > 0:
                row.slope_window = float(np.log(row.band_width / prev.band_width) / np.log(lam / prev.lam))
            prev = row
        except (ConvergenceError, np.linalg.LinAlgError) as exc:
            row.error = str(exc)
        rows.append(row)
    return SweepTable(rows, n_low, len(sectors), {"sector_sizes": sorted({len(s[0]) for s in sectors})})
