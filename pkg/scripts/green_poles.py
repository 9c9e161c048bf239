"""Recover single-particle energies from two-point function samples.

For a stationary one-mode gas the lesser Green function oscillates at
exactly the mode frequency; sampling it on a finite window and peak
fitting the discrete spectrum should recover the frequency to within
the grid resolution 2 pi / window.  Also prints the detailed-balance
ratio G>(0) / G<(0) = hbar exp(beta eps) as a consistency check.
"""

import argparse

import numpy as np

from qtoolkit.lfunctional import two_point_green


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", type=float, nargs="+",
                        default=[0.3, 0.7, 1.1, 2.5])
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--window", type=float, default=400.0)
    parser.add_argument("--dt", type=float, default=0.05)
    parser.add_argument("--hbar", type=float, default=1.0)
    args = parser.parse_args()

    taus = np.arange(0.0, args.window, args.dt)
    print(f"window={args.window}  dt={args.dt}  beta={args.beta}")
    print(f"{'eps':>8}  {'pole':>12}  {'gap':>10}  {'resolution':>10}  "
          f"{'kms ratio':>10}  {'expected':>10}")
    for eps in args.eps:
        n = 1.0 / np.expm1(args.beta * eps)
        res = two_point_green([n], [eps], taus, hbar=args.hbar)
        kms = abs(res.kms_ratio())
        expected = args.hbar * np.exp(args.beta * eps)
        print(f"{eps:>8.3f}  {res.pole:>12.6f}  {abs(res.pole - eps):>10.2e}"
              f"  {res.resolution:>10.2e}  {kms:>10.4f}  {expected:>10.4f}")


if __name__ == "__main__":
    main()
