"""Classical limit of the lattice functional flow.

Evolves a Gaussian functional on a phase-space lattice under the exact
sine-bracket generator and under its classical (Poisson) limit, then
fits the scaling of the gap between the two against hbar.  The leading
correction enters at second order, so the log-log slope should be 2.
"""

import argparse

import numpy as np

from qtoolkit.lfunctional import hbar_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--hbars", type=float, nargs="+",
                        default=[1e-1, 1e-2, 1e-3])
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--steps", type=int, default=64)
    args = parser.parse_args()

    result = hbar_sweep(hbars=tuple(args.hbars), t=args.t, steps=args.steps)
    print(f"{'hbar':>10}  {'gap':>14}")
    for hbar, gap in zip(result.hbars, result.gaps):
        print(f"{hbar:>10.3e}  {gap:>14.8e}")
    ratios = np.divide(result.gaps[:-1], result.gaps[1:])
    print(f"successive gap ratios: {np.array2string(ratios, precision=3)}")
    print(f"log-log slope: {result.slope:.4f}  (expected 2.0 +- 0.3)")


if __name__ == "__main__":
    main()
