"""Outcome atlas over the shooting constants (a1, a2), with a refined diagonal boundary.

The CSV is plot-ready (a1, a2, outcome, beta1, beta2). Along the diagonal
the switch from non-topological to topological behaviour is bisected.
"""
import argparse
from collections import Counter

from skewcs.radial import RadialParams
from skewcs.shooting import atlas_to_csv, refine_boundary, scan_region


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n1", type=int, default=1)
    ap.add_argument("--n2", type=int, default=1)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--lo", type=float, default=-6.0)
    ap.add_argument("--hi", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=29)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="atlas.csv")
    args = ap.parse_args(argv)

    params = RadialParams(args.n1, args.n2, args.eps, 1.0)
    cells = scan_region((args.lo, args.hi), (args.lo, args.hi), args.steps, params, workers=args.workers)
    with open(args.out, "w") as fh:
        fh.write(atlas_to_csv(cells))
    print(f"wrote {args.out}: {dict(Counter(c.outcome.label for c in cells))}")

    lo, hi = refine_boundary((args.lo, args.lo), (0.0, 0.0), params, xtol=1e-6)
    print(f"diagonal boundary between a = {lo[0]:.7f} and a = {hi[0]:.7f}")


if __name__ == "__main__":
    main()
