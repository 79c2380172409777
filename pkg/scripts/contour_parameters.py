"""Trapezoid nodes M and Neumann length N as the radius ratio Lambda/lambda shrinks.

Also reports the l1 norm of the combined polynomial, which sets the walk
count of the shared-walk contour estimator.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from matdeg.estimators import contour_parameters, contour_poly, poly_norm_l1_scaled, walk_count


@dataclass(frozen=True)
class ContourConfig:
    lam: float = 0.25
    ratios: tuple = (1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0)
    eps: tuple = (0.1, 0.01, 0.001)


def run(cfg: ContourConfig):
    f = lambda z: np.exp(z / 2)
    for eps in cfg.eps:
        for q in cfg.ratios:
            Lam = q * cfg.lam
            M, N = contour_parameters(eps / 2, cfg.lam, Lam)
            P = contour_poly(f, Lam, M, N)
            yield {"eps": eps, "ratio": q, "M": M, "N": N,
                   "l1_norm": poly_norm_l1_scaled(P, Lam),
                   "walks": walk_count(P, Lam, eps / 2, 1 / 3)}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lam", type=float, default=0.25)
    p.add_argument("--out", default=None)
    args = p.parse_args()
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, ["eps", "ratio", "M", "N", "l1_norm", "walks"])
    w.writeheader()
    for row in run(ContourConfig(lam=args.lam)):
        w.writerow(row)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
