"""Classical estimators of <i|p(A)|j> that read A only through its oracles.

* ``exact_entry``: expands every path from j without merging, so the query
  count follows the s^(d-1) law of the definition-based algorithm.
* ``walk_estimate``: importance-sampled random walks; one batch of walks
  estimates every power <i|A^r|j> at once.
* ``contour_estimate``: trapezoidal rule on |z| = Lambda applied to a
  truncated Neumann series of the resolvent, with the resolvent entries
  estimated by walks.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .funcspace import ChebPoly
from .sparsemat import OracleAccess, QueryCounter, SparseHermitian

CHUNK_WALKS = 1 << 15     # walks per RNG stream; fixes the stream layout for a seed
CIRCLE_SAMPLES = 4096
L_MARGIN = 1.1
EXACT_BUDGET = 10_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PolySpec:
    """p(x) = sum_r a_r x^r in the monomial basis (real or complex a_r)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if not np.issubdtype(c.dtype, np.complexfloating):
            c = c.astype(float)
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1, dtype=c.dtype)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_cheb(cls, p: ChebPoly) -> "PolySpec":
        return cls(p.to_monomial())

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


@dataclass
class EstimateReport:
    value: complex | float
    target_eps: float
    walks_used: int
    queries: QueryCounter
    method: str
    seed: int | None = None
    wall_time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        v = self.value
        out = {
            "method": self.method,
            "value": float(np.real(v)),
            "eps": self.target_eps,
            "walks": self.walks_used,
            "o1": self.queries.o1,
            "o2": self.queries.o2,
            "seed": self.seed,
            "wall_time": self.wall_time,
        }
        if np.iscomplexobj(v) and np.imag(v) != 0:
            out["value_imag"] = float(np.imag(v))
        out.update(self.diagnostics)
        return out


def poly_norm_l1_scaled(p: PolySpec, beta: float) -> float:
    """||p(beta x)||_l1 = sum_r |a_r| beta^r."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    r = np.arange(p.coeffs.size)
    return float(np.sum(np.abs(p.coeffs) * float(beta) ** r))


def poly_norm_l2_scaled(p: PolySpec, beta: float) -> float:
    """||p(beta x)||_l2 = sqrt(sum_r |a_r beta^r|^2)."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    r = np.arange(p.coeffs.size)
    return float(np.sqrt(np.sum((np.abs(p.coeffs) * float(beta) ** r) ** 2)))


def _access(A, counter: QueryCounter | None) -> OracleAccess:
    if isinstance(A, SparseHermitian):
        return OracleAccess(A, counter if counter is not None else QueryCounter())
    if counter is not None and counter is not A.counter:
        raise ValueError("pass the counter through the oracle object")
    return A


def _check_index(oracle, *idx):
    for k in idx:
        if not 1 <= k <= oracle.n:
            raise IndexError(f"index {k} outside 1..{oracle.n}")


def _column(oracle, nodes: np.ndarray):
    """Neighbour table and entries A[k', k] for every node k (0 = absent)."""
    return oracle.neighbours_batch(nodes)


def exact_entry(A, p: PolySpec, i: int, j: int, counter: QueryCounter | None = None,
                budget: int = EXACT_BUDGET):
    """Exact <i|p(A)|j> by expanding all walks from j (no merging of paths).

    At level r-1 every path end k contributes w * A[i, k] to <i|A^r|j>; the
    level is then expanded through the position and entry oracles.
    """
    oracle = _access(A, counter)
    _check_index(oracle, i, j)
    a = p.coeffs
    s = oracle.sparsity
    total = a[0] * (1.0 if i == j else 0.0)
    nodes = np.array([j])
    w = np.ones(1, dtype=complex if not oracle.is_real or np.iscomplexobj(a) else float)
    spent = 0
    for r in range(1, p.degree + 1):
        if nodes.size == 0:
            break
        if a[r] != 0:
            spent += nodes.size
            if spent > budget:
                raise BudgetExceeded(f"exact expansion needs more than {budget} queries")
            aik = oracle.entries_batch(np.full(nodes.size, i), nodes)
            total = total + a[r] * np.sum(w * aik)
        if r == p.degree:
            break
        spent += 2 * s * nodes.size
        if spent > budget:
            raise BudgetExceeded(f"exact expansion needs more than {budget} queries")
        pos, vals = _column(oracle, nodes)
        keep = pos > 0
        w = (w[:, None] * vals)[keep]
        nodes = pos[keep]
    if oracle.is_real and not np.iscomplexobj(a):
        return float(np.real(total))
    return complex(total)


def oracle_norm1(oracle: OracleAccess) -> float:
    """max column l1 norm via a full oracle scan (n*s position + nnz entry queries)."""
    best = 0.0
    rows = np.arange(1, oracle.n + 1)
    for start in range(0, rows.size, 4096):
        _, vals = _column(oracle, rows[start:start + 4096])
        best = max(best, float(np.max(np.sum(np.abs(vals), axis=1), initial=0.0)))
    return best


def walk_count(p: PolySpec, norm1: float, eps: float, fail_prob: float,
               complex_entries: bool = False) -> int:
    """Walks needed so that |estimate - <i|p(A)|j>| <= eps w.p. >= 1 - fail_prob.

    Each Y_r lies in [-||A||_1^r, ||A||_1^r]; Hoeffding with that range plus a
    union bound over the d powers gives p = 2 ln(2d/delta) / eps'^2 with
    eps' = eps / ||p(||A||_1 x)||_l1.  Complex entries bound the real and
    imaginary parts separately: p = 4 ln(4d/delta) / eps'^2.
    """
    if eps <= 0 or not 0 < fail_prob < 1:
        raise ValueError("need eps > 0 and 0 < fail_prob < 1")
    d = p.degree
    if d == 0:
        return 0
    l1 = poly_norm_l1_scaled(p, norm1)
    if l1 == 0:
        return 0
    ep = eps / l1
    if complex_entries:
        return math.ceil(4.0 * math.log(4.0 * d / fail_prob) / ep**2)
    return math.ceil(2.0 * math.log(2.0 * d / fail_prob) / ep**2)


def _walk_chunk(oracle, d: int, i: int, j: int, count: int, rng: np.random.Generator):
    """Sum over `count` walks of Y_r for r = 1..d (shape d)."""
    dtype = float if oracle.is_real else complex
    nodes = np.full(count, j, dtype=int)
    y = np.ones(count, dtype=dtype)
    sums = np.zeros(d, dtype=dtype)
    alive = np.ones(count, dtype=bool)
    for r in range(d):
        if not alive.all():
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            nodes, y = nodes[idx], y[idx]
            alive = np.ones(idx.size, dtype=bool)
        pos, vals = _column(oracle, nodes)
        mag = np.abs(vals)
        cdf = np.cumsum(mag, axis=1)
        norms = cdf[:, -1]
        u = rng.random(nodes.size) * norms
        pick = np.minimum((cdf <= u[:, None]).sum(axis=1), pos.shape[1] - 1)
        rows = np.arange(nodes.size)
        v = vals[rows, pick]
        m = mag[rows, pick]
        # dead ends (empty column) keep weight 0 and stop
        alive = norms > 0
        step = np.divide(v, m, out=np.zeros_like(v), where=m > 0) * norms
        y = y * step
        nodes = np.where(alive, pos[rows, pick], nodes)
        sums[r] = y[nodes == i].sum()
    return sums


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MATDEG_THREADS", "1")))
    except ValueError:
        return 1


def walk_sums(oracle, d: int, i: int, j: int, walks: int, seed: int, threads: int | None = None):
    """Per-power sums of Y over `walks` walks, reproducible for a given seed.

    Walks are split in fixed chunks; chunk c draws from SeedSequence([seed, c]),
    so the result does not depend on the thread count.
    """
    chunks = [(c, min(CHUNK_WALKS, walks - c * CHUNK_WALKS))
              for c in range(-(-walks // CHUNK_WALKS))]

    def run(item):
        c, count = item
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), c]))
        return _walk_chunk(oracle, d, i, j, count, rng)

    threads = _threads() if threads is None else threads
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    dtype = float if oracle.is_real else complex
    return np.sum(parts, axis=0) if parts else np.zeros(d, dtype=dtype)


def walk_estimate(A, p: PolySpec, i: int, j: int, eps: float, fail_prob: float,
                  rng_seed: int = 0, norm1: float | None = None,
                  counter: QueryCounter | None = None, walks: int | None = None,
                  threads: int | None = None) -> EstimateReport:
    """Monte Carlo estimate of <i|p(A)|j> within eps with probability >= 1 - fail_prob.

    ``norm1`` (an upper bound on ||A||_1) is found by an oracle scan when not
    given; those queries are included in the report and listed separately.
    """
    t0 = time.perf_counter()
    oracle = _access(A, counter)
    _check_index(oracle, i, j)
    scan = QueryCounter()
    if norm1 is None:
        before = oracle.counter.snapshot()
        norm1 = oracle_norm1(oracle)
        after = oracle.counter.snapshot()
        scan = QueryCounter(after.o1 - before.o1, after.o2 - before.o2)
    n_walks = walks if walks is not None else walk_count(
        p, norm1, eps, fail_prob, complex_entries=not oracle.is_real)
    a = p.coeffs
    value = a[0] * (1.0 if i == j else 0.0)
    if p.degree > 0 and n_walks > 0:
        sums = walk_sums(oracle, p.degree, i, j, n_walks, rng_seed, threads)
        value = value + np.dot(a[1:], sums / n_walks)
    if oracle.is_real and not np.iscomplexobj(a):
        value = float(np.real(value))
    diag = {"norm1": float(norm1), "scan_o1": scan.o1, "scan_o2": scan.o2}
    return EstimateReport(value, eps, int(n_walks), oracle.counter.snapshot(), "walk",
                          rng_seed, time.perf_counter() - t0, diag)


def contour_parameters(eps: float, lam: float, Lam: float) -> tuple[int, int]:
    """Trapezoid node count M and Neumann truncation N for |z| = Lambda."""
    if not Lam > lam > 0:
        raise ValueError("need Lambda > lambda > 0")
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    q = math.log(Lam / lam)
    M = math.ceil(math.log(1.0 / eps) / q)
    N = math.ceil((math.log(1.0 / (1.0 - lam / Lam)) + math.log(1.0 / eps)) / q) - 1
    return max(M, 1), max(N, 0)


def circle_bound(f: Callable, Lam: float, samples: int = CIRCLE_SAMPLES) -> float:
    """1.1 * max |f| over `samples` points of |z| = Lambda."""
    z = Lam * np.exp(2j * np.pi * np.arange(samples) / samples)
    with np.errstate(over="raise", invalid="raise"):
        try:
            L = float(np.max(np.abs(f(z))))
        except FloatingPointError as exc:
            raise OverflowError("|f| overflows on the contour") from exc
    if not np.isfinite(L):
        raise OverflowError("|f| is not finite on the contour")
    return L_MARGIN * L


def contour_poly(f: Callable, Lam: float, M: int, N: int) -> PolySpec:
    """Coefficients C_r = (1/M) sum_k f(z_k) z_k^{-r}, r = 0..N, z_k = Lambda e^{2 pi i k/M}."""
    z = Lam * np.exp(2j * np.pi * np.arange(M) / M)
    fz = np.asarray(f(z), dtype=complex)
    r = np.arange(N + 1)
    C = (fz[None, :] * z[None, :] ** (-r[:, None])).sum(axis=1) / M
    return PolySpec(C)


def contour_estimate(A, f: Callable, lam: float, Lam: float, eps: float, fail_prob: float,
                     i: int = 1, j: int = 1, rng_seed: int = 0, shared: bool = True,
                     norm1: float | None = None, counter: QueryCounter | None = None,
                     threads: int | None = None) -> EstimateReport:
    """Estimate <i|f(A)|j> for f analytic on a disk of radius > Lambda^2/lambda.

    Half of eps goes to the deterministic trapezoid/Neumann truncation, half to
    sampling.  With ``shared=True`` one batch of walks serves every node
    through the combined polynomial sum_r C_r A^r.  With ``shared=False`` each
    node gets its own walks at accuracy eps/(2L) and failure fail_prob/M.
    """
    t0 = time.perf_counter()
    oracle = _access(A, counter)
    _check_index(oracle, i, j)
    M, N = contour_parameters(eps / 2, lam, Lam)
    L = circle_bound(f, Lam)
    if norm1 is None:
        norm1 = oracle_norm1(oracle)
    if shared:
        P = contour_poly(f, Lam, M, N)
        rep = walk_estimate(oracle, P, i, j, eps / 2, fail_prob, rng_seed, norm1=norm1,
                            threads=threads)
        value = complex(rep.value)
        walks = rep.walks_used
    else:
        z = Lam * np.exp(2j * np.pi * np.arange(M) / M)
        fz = np.asarray(f(z), dtype=complex)
        value = 0j
        walks = 0
        for k in range(M):
            neumann = PolySpec(z[k] ** (-np.arange(N + 1, dtype=float)))
            rep = walk_estimate(oracle, neumann, i, j, eps / (2 * L), fail_prob / M,
                                rng_seed * 1_000_003 + k, norm1=norm1, threads=threads)
            value += fz[k] * complex(rep.value) / M
            walks += rep.walks_used
    out = float(value.real) if oracle.is_real else value
    diag = {"M": M, "N": N, "L": L, "imag_residue": float(abs(value.imag)) if oracle.is_real
            else 0.0, "shared": shared}
    return EstimateReport(out, eps, walks, oracle.counter.snapshot(), "contour", rng_seed,
                          time.perf_counter() - t0, diag)


def dense_entry(A: SparseHermitian, f: Callable, i: int, j: int):
    """Reference value <i|f(A)|j> from a dense eigendecomposition (not oracle-limited)."""
    M = A.dense()
    w, V = np.linalg.eigh(M)
    fw = np.asarray(getattr(f, "evaluator", f)(w))
    val = np.sum(V[i - 1] * fw * V[j - 1].conj())
    if A.is_real and not np.iscomplexobj(fw):
        return float(val.real)
    return complex(val)
