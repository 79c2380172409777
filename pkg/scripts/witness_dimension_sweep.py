"""Witness dimension and approximate degree of sin(tx) as t grows.

Writes one CSV row per (t, eps): the odd-part degree, the witness
dimension, the signed entry and the identity residual.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from matdeg.funcspace import parse_function
from matdeg.witness import build_odd_witness


@dataclass(frozen=True)
class SweepConfig:
    ts: tuple = (2, 4, 8, 12, 16, 20, 24, 28, 32)
    eps: tuple = (0.1, 0.25, 0.5)


def run(cfg: SweepConfig):
    for t in cfg.ts:
        f = parse_function(f"sin:t={t}")
        for eps in cfg.eps:
            cert = build_odd_witness(f, eps)
            yield {"t": t, "eps": eps, "degree": cert.degree_d, "dimension": cert.n,
                   "entry": cert.achieved_value,
                   "residual": abs(cert.achieved_value - cert.claimed_value)}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ts", default=None, help="comma-separated t values")
    p.add_argument("--out", default=None)
    args = p.parse_args()
    cfg = SweepConfig() if args.ts is None else SweepConfig(
        tuple(float(t) for t in args.ts.split(",")))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, ["t", "eps", "degree", "dimension", "entry", "residual"])
    w.writeheader()
    for row in run(cfg):
        w.writerow(row)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
