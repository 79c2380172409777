"""Query counts of the path-expansion algorithm against s^(d-1) d."""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from matdeg.estimators import PolySpec, exact_entry
from matdeg.sparsemat import QueryCounter, random_sparse_hermitian


@dataclass(frozen=True)
class ScalingConfig:
    n: int = 256
    sparsities: tuple = (2, 3, 4)
    degrees: tuple = (2, 3, 4, 5, 6)
    seed: int = 20240417


def run(cfg: ScalingConfig):
    for s in cfg.sparsities:
        A = random_sparse_hermitian(cfg.n, s, cfg.seed + s, target_norm1=1.0)
        for d in cfg.degrees:
            c = QueryCounter()
            exact_entry(A, PolySpec(np.r_[np.zeros(d), 1.0]), 1, 2, counter=c)
            yield {"s": s, "d": d, "o1": c.o1, "o2": c.o2, "total": c.total,
                   "ratio": c.total / (s ** (d - 1) * d)}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--seed", type=int, default=20240417)
    p.add_argument("--out", default=None)
    args = p.parse_args()
    cfg = ScalingConfig(n=args.n, seed=args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, ["s", "d", "o1", "o2", "total", "ratio"])
    w.writeheader()
    for row in run(cfg):
        w.writerow(row)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
