"""Random-walk estimator: walks, queries per walk and observed error versus eps.

Each eps is run on several seeds; the CSV reports the fraction of runs that
land within eps of the dense value together with the mean query cost.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from matdeg.estimators import PolySpec, dense_entry, walk_estimate
from matdeg.funcspace import cheb_fit, parse_function
from matdeg.sparsemat import random_sparse_hermitian


@dataclass(frozen=True)
class WalkConfig:
    n: int = 64
    s: int = 4
    norm1: float = 0.5
    function: str = "sin:t=4"
    degree: int = 15
    eps: tuple = (0.2, 0.1, 0.05, 0.02)
    fail_prob: float = 1 / 3
    runs: int = 10
    seed: int = 20240417


def run(cfg: WalkConfig):
    f = parse_function(cfg.function)
    P = PolySpec.from_cheb(cheb_fit(f, cfg.degree))
    A = random_sparse_hermitian(cfg.n, cfg.s, cfg.seed, target_norm1=cfg.norm1)
    i = int(A.cols[0][0])
    ref = dense_entry(A, f, i, 1)
    for eps in cfg.eps:
        errs, per_walk, walks = [], [], 0
        for r in range(cfg.runs):
            rep = walk_estimate(A, P, i, 1, eps, cfg.fail_prob, rng_seed=cfg.seed + r,
                                norm1=cfg.norm1)
            errs.append(abs(rep.value - ref))
            per_walk.append(rep.queries.total / rep.walks_used)
            walks = rep.walks_used
        errs = np.array(errs)
        yield {"eps": eps, "walks": walks, "queries_per_walk": float(np.mean(per_walk)),
               "mean_error": float(errs.mean()), "max_error": float(errs.max()),
               "hit_rate": float(np.mean(errs <= eps))}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=20240417)
    p.add_argument("--out", default=None)
    args = p.parse_args()
    cfg = WalkConfig(runs=args.runs, seed=args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    cols = ["eps", "walks", "queries_per_walk", "mean_error", "max_error", "hit_rate"]
    w = csv.DictWriter(fh, cols)
    w.writeheader()
    for row in run(cfg):
        w.writerow(row)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
