"""Self-energy orders 1..n on a patch: trivial part, size of the non-trivial part.

Odd orders and the second order should act trivially; the first non-trivial
order is the fourth.

    python scripts/order_scan.py --group Z3 --patch single_vertex --max-order 6
"""

import argparse

import numpy as np

from qdgadget.groups import make_group
from qdgadget.lattice import parse_patch
from qdgadget.perturbation import assemble_model, self_energy
from qdgadget.perturbation.targets import default_targets, fit_effective


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--group", default="Z3")
    ap.add_argument("--variant")
    ap.add_argument("--patch", default="single_vertex")
    ap.add_argument("--max-order", type=int, default=6)
    ap.add_argument("--mode", default="factorized")
    args = ap.parse_args()
    G = make_group(args.group)
    variant = args.variant or ("toric" if G.order == 2 else "cyclic" if G.is_abelian else "general")
    m = assemble_model(parse_patch(args.patch), G, variant)
    targets = default_targets(m, centralizer=True)
    print(f"{args.group}/{variant} on {args.patch}: logical dimension {m.logical_dim}")
    for n in range(1, args.max_order + 1):
        se = self_energy(m, n, args.mode)
        scale = max(1.0, np.abs(se.coefficient).max())
        line = f"  n={n}: trivial {se.trivial_part().real:+.6e}  non-trivial {se.nontrivial_norm() / scale:.2e}"
        if se.nontrivial_norm() > 1e-10 * scale:
            fit = fit_effective(se, targets)
            coefs = " ".join(f"{k}={v:.4e}" for k, v in sorted(fit.per_site.items()))
            line += f"  fit residual {fit.relative_residual:.2e}  {coefs}"
        print(line, flush=True)


if __name__ == "__main__":
    main()
