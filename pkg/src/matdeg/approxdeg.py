"""Best uniform approximation, epsilon-approximate degree, and dual weights.

The minimax polynomial is found with a multi-point Remez exchange in the
Chebyshev basis.  Parity-restricted problems (odd or even approximants) are
solved on [0, 1] with the matching half of the basis.  A dense-grid linear
program serves both as an independent oracle and as the fallback when the
exchange stalls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

from .funcspace import ChebPoly, TargetFunction, parity_part

log = logging.getLogger(__name__)

MAX_ITER = 60
REL_TOL = 1e-10
DEGREE_CAP = 512
# Val(f, d) <= eps is decided with this slack, so exactly attained values count.
VAL_SLACK = 1e-10
# errors below this (relative to max|f|) are rounding noise; accepted unlevelled
NOISE_FLOOR = 1e-12


class RemezConvergenceError(RuntimeError):
    """Exchange iteration hit the cap; carries the best iterate and its bracket."""

    def __init__(self, msg, best=None, bracket=None):
        super().__init__(msg)
        self.best = best
        self.bracket = bracket


class DegreeCapExceeded(RuntimeError):
    pass


class DualityGapError(RuntimeError):
    pass


@dataclass(frozen=True)
class BestApprox:
    poly: ChebPoly
    error: float
    refs: np.ndarray
    signs: np.ndarray
    parity: str = "none"
    degree: int = 0
    levelled: float = 0.0
    iterations: int = 0

    @property
    def bracket(self) -> tuple[float, float]:
        """Certified enclosure [levelled, sup-error] of the optimal value."""
        return (self.levelled, self.error)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "parity": self.parity,
            "error": self.error,
            "levelled": self.levelled,
            "coeffs": self.poly.coeffs.tolist(),
            "refs": self.refs.tolist(),
            "signs": self.signs.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BestApprox":
        return cls(ChebPoly(np.array(d["coeffs"])), float(d["error"]), np.array(d["refs"]),
                   np.array(d["signs"]), d["parity"], int(d["degree"]), float(d["levelled"]))


@dataclass(frozen=True)
class DualWeights:
    points: np.ndarray
    weights: np.ndarray
    alpha: float
    objective: float
    parity: str = "none"
    log_abs_alpha: float = 0.0

    def to_dict(self) -> dict:
        return {
            "parity": self.parity,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "alpha": self.alpha,
            "log_abs_alpha": self.log_abs_alpha,
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DualWeights":
        return cls(np.array(d["points"]), np.array(d["weights"]), float(d["alpha"]),
                   float(d["objective"]), d["parity"], float(d["log_abs_alpha"]))


# --- basis bookkeeping ------------------------------------------------------

def basis_indices(d: int, parity: str) -> np.ndarray:
    """Chebyshev indices spanning degree <= d polynomials of the given parity."""
    if d < 0:
        raise ValueError("degree must be >= 0")
    if parity == "none":
        return np.arange(d + 1)
    if parity == "odd":
        l = (d - 1) // 2
        return 2 * np.arange(l + 1) + 1
    if parity == "even":
        return 2 * np.arange(d // 2 + 1)
    raise ValueError(f"bad parity {parity!r}")


def _interval(parity: str) -> tuple[float, float]:
    return (-1.0, 1.0) if parity == "none" else (0.0, 1.0)


def _basis_matrix(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # T_k(x) = cos(k arccos x) is accurate and cheap on [-1, 1]
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    return np.cos(np.outer(theta, idx))


def _initial_refs(idx: np.ndarray, parity: str) -> np.ndarray:
    k = len(idx)
    if parity == "none":
        n = k  # extrema of T_{d+1}
        x = np.cos(np.pi * np.arange(n + 1) / n) if n > 0 else np.zeros(1)
    elif parity == "odd":
        x = np.cos(np.pi * np.arange(k + 1) / (2 * k + 1))
    else:
        x = np.cos(np.pi * np.arange(k + 1) / (2 * k))
    return np.sort(x)


def _coeffs_from(idx: np.ndarray, c: np.ndarray) -> np.ndarray:
    full = np.zeros(int(idx.max()) + 1 if len(idx) else 1)
    full[idx] = c
    return full


def _grid(parity: str, k: int) -> np.ndarray:
    a, b = _interval(parity)
    n = max(4000, 80 * (k + 1))
    cheb = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.linspace(np.pi, 0.0, n))
    uni = np.linspace(a, b, n)
    return np.unique(np.concatenate([cheb, uni]))


def _refine_extrema(resid, lo, hi, sign, iters=80):
    """Vectorised golden-section maximisation of sign*resid on [lo, hi]."""
    g = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = lo.copy(), hi.copy()
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc = sign * resid(c)
    fd = sign * resid(d)
    for _ in range(iters):
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        nc = np.where(left, hi - g * (hi - lo), d)
        nd = np.where(left, c, lo + g * (hi - lo))
        c, d = nc, nd
        fc = sign * resid(c)
        fd = sign * resid(d)
        if np.all(hi - lo < 1e-15):
            break
    return 0.5 * (lo + hi)


def _local_extrema(x, r, resid):
    """Local maxima of |r| on the grid (endpoints included), refined."""
    n = len(x)
    ar = np.abs(r)
    s = np.sign(r)
    keep = np.zeros(n, bool)
    inner = (ar[1:-1] >= ar[:-2]) & (ar[1:-1] >= ar[2:])
    keep[1:-1] = inner
    keep[0] = ar[0] >= ar[1] or s[0] != s[1]
    keep[-1] = ar[-1] >= ar[-2] or s[-1] != s[-2]
    idx = np.flatnonzero(keep)
    pts = x[idx].copy()
    mid = (idx > 0) & (idx < n - 1)
    if np.any(mid):
        j = idx[mid]
        pts[mid] = _refine_extrema(resid, x[j - 1], x[j + 1], s[j])
        # keep the refined point only when it improves on the grid value
        better = np.abs(resid(pts[mid])) >= ar[j]
        pts[mid] = np.where(better, pts[mid], x[j])
    vals = resid(pts)
    order = np.argsort(pts)
    return pts[order], vals[order]


def _alternating_subset(pts, vals, m):
    """Choose m alternating extrema, keeping the largest in each same-sign run."""
    px, pv = [pts[0]], [vals[0]]
    for x, v in zip(pts[1:], vals[1:]):
        if np.sign(v) == np.sign(pv[-1]) or v == 0:
            if abs(v) > abs(pv[-1]):
                px[-1], pv[-1] = x, v
        else:
            px.append(x)
            pv.append(v)
    while len(px) > m:
        if len(px) - m == 1:
            end = 0 if abs(pv[0]) < abs(pv[-1]) else -1
            px.pop(end)
            pv.pop(end)
            continue
        # drop the weakest extremum, then merge the two same-sign neighbours
        i = int(np.argmin(np.abs(pv)))
        px.pop(i)
        pv.pop(i)
        if 0 < i < len(px):
            j = i - 1 if abs(pv[i - 1]) >= abs(pv[i]) else i
            drop = i if j == i - 1 else i - 1
            px.pop(drop)
            pv.pop(drop)
    return np.array(px), np.array(pv)


def _remez(f, idx, parity, refs=None, max_iter=MAX_ITER, tol=REL_TOL):
    k = len(idx)
    a, b = _interval(parity)
    grid = _grid(parity, k)
    fgrid = np.asarray(f(grid), dtype=float)
    scale = max(1.0, float(np.max(np.abs(fgrid))))

    if k == 0:
        # only the zero polynomial is available
        j = int(np.argmax(np.abs(fgrid)))
        pts, vals = _local_extrema(grid, fgrid, lambda x: np.asarray(f(x), float))
        best = int(np.argmax(np.abs(vals)))
        x0, v0 = pts[best], vals[best]
        if abs(v0) < abs(fgrid[j]):
            x0, v0 = grid[j], fgrid[j]
        return (np.zeros(1), abs(v0), abs(v0), np.array([x0]),
                np.array([np.sign(v0) or 1.0]), 0, True)

    x = _initial_refs(idx, parity) if refs is None else np.sort(np.asarray(refs, float))
    alt = (-1.0) ** np.arange(k + 1)
    best = None
    for it in range(1, max_iter + 1):
        A = np.column_stack([_basis_matrix(x, idx), alt])
        sol = np.linalg.solve(A, np.asarray(f(x), dtype=float))
        c, E = sol[:-1], sol[-1]

        def resid(t, c=c):
            return np.asarray(f(t), dtype=float) - _basis_matrix(np.atleast_1d(t), idx) @ c

        r = fgrid - _basis_matrix(grid, idx) @ c
        pts, vals = _local_extrema(grid, r, resid)
        maxr = float(np.max(np.abs(vals)))
        if maxr <= 1e-14 * scale:
            # exactly representable: zero error, any reference certifies it
            return c, maxr, abs(E), x, np.sign(alt * (E or 1.0)), it, True
        if best is None or maxr < best[1]:
            best = (c, maxr, abs(E), x, np.sign(alt * (E if E else 1.0)), it)
        nx, nv = _alternating_subset(pts, vals, k + 1)
        if len(nx) < k + 1:
            log.debug("exchange lost alternation at iteration %d", it)
            return (*best, best[1] <= NOISE_FLOOR * scale)
        minr = float(np.min(np.abs(nv)))
        # below ~1e-13 the residual is rounding noise and cannot level further
        if maxr - minr <= tol * maxr + 1e-13 * scale:
            signs = np.sign(nv)
            return c, maxr, abs(E), nx, signs, it, True
        x = nx
    return (*best, best[1] <= NOISE_FLOOR * scale)


def best_approx(f: TargetFunction, d: int, parity: str = "none",
                max_iter: int = MAX_ITER) -> BestApprox:
    """Minimax approximation of degree <= d, optionally restricted by parity.

    For a parity restriction the problem is posed on [0, 1] and ``f`` is
    replaced by its matching parity part.
    """
    g = parity_part(f, parity)
    idx = basis_indices(d, parity)
    c, err, lev, refs, signs, it, ok = _remez(g, idx, parity, max_iter=max_iter)
    if not ok:
        refs0 = _grid_lp_refs(g, idx, parity)
        c2, err2, lev2, refs2, signs2, it2, ok = _remez(g, idx, parity, refs=refs0,
                                                      max_iter=max_iter)
        if err2 < err:
            c, err, lev, refs, signs, it = c2, err2, lev2, refs2, signs2, it + it2
        if not ok:
            best = BestApprox(ChebPoly(_coeffs_from(idx, c)), err, refs, signs, parity, d,
                              lev, it)
            raise RemezConvergenceError(
                f"exchange did not converge for {f.label}, d={d}, parity={parity}",
                best=best, bracket=(lev, err))
    coeffs = _coeffs_from(idx, c) if len(idx) else np.zeros(1)
    return BestApprox(ChebPoly(coeffs), float(err), np.asarray(refs, float),
                      np.asarray(signs, float), parity, d, float(lev), it)


def val(f: TargetFunction, d: int, parity: str = "none") -> float:
    """Optimal uniform error Val(f, d)."""
    return best_approx(f, d, parity).error


# --- grid LP ---------------------------------------------------------------

def _grid_lp(f, idx, parity, n_points):
    a, b = _interval(parity)
    x = np.linspace(a, b, n_points)
    fx = np.asarray(f(x), dtype=float)
    k = len(idx)
    B = _basis_matrix(x, idx) if k else np.zeros((n_points, 0))
    ones = np.ones((n_points, 1))
    # variables (c, delta); minimise delta with |f - Bc| <= delta
    A_ub = np.vstack([np.hstack([-B, -ones]), np.hstack([B, -ones])])
    b_ub = np.concatenate([-fx, fx])
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    bounds = [(None, None)] * k + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"grid LP failed: {res.message}")
    return x, fx, res


def grid_lp_value(f: TargetFunction, d: int, parity: str = "none",
                  n_points: int = 10_000) -> float:
    """Val(f, d) restricted to a uniform grid, by a generic LP solver."""
    g = parity_part(f, parity)
    _, _, res = _grid_lp(g, basis_indices(d, parity), parity, n_points)
    return float(res.x[-1])


def _grid_lp_refs(f, idx, parity, n_points=4000):
    x, fx, res = _grid_lp(f, idx, parity, n_points)
    c = res.x[:-1]
    r = fx - (_basis_matrix(x, idx) @ c if len(idx) else 0.0)
    pts, vals = _local_extrema(x, r, lambda t: np.interp(t, x, r))
    nx, _ = _alternating_subset(pts, vals, len(idx) + 1)
    if len(nx) < len(idx) + 1:
        return None
    return nx


# --- epsilon-approximate degree ---------------------------------------------

def approx_degree(f: TargetFunction, eps: float, parity: str = "none",
                  cap: int = DEGREE_CAP) -> tuple[int, BestApprox]:
    """Smallest d with Val(f, d) <= eps, by doubling then bisection."""
    if not 0 < eps <= 1:
        if eps > 1:
            eps = 1.0
        else:
            raise ValueError("eps must lie in (0, 1]")
    cache: dict[int, BestApprox] = {}

    def solve(d):
        if d not in cache:
            cache[d] = best_approx(f, d, parity)
        return cache[d]

    def ok(d):
        return solve(d).error <= eps + VAL_SLACK

    if ok(0):
        return 0, solve(0)
    lo, hi = 0, 1
    while not ok(hi):
        lo = hi
        hi *= 2
        if hi > cap:
            if ok(cap):
                hi = cap
                break
            raise DegreeCapExceeded(f"{f.label}: degree exceeds cap {cap} at eps={eps}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi, solve(hi)


# --- dual weights ------------------------------------------------------------

def _log_products(points: np.ndarray, parity: str):
    """log|prod_{j!=i}(u_i - u_j)| and its sign, u = x or x^2 by parity."""
    u = points if parity == "none" else points ** 2
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, 1.0)
    logs = np.sum(np.log(np.abs(diff)), axis=1)
    signs = np.prod(np.sign(diff), axis=1)
    if parity == "odd":
        logs = logs + np.log(np.abs(points))
        signs = signs * np.sign(points)
    return logs, signs


def vandermonde_weights(points, parity: str = "none"):
    """Unit-l1 null vector of the (parity) Vandermonde system, alpha > 0.

    Returns ``(weights, alpha, log|alpha|)`` with weights
    ``alpha / prod_{j!=i}(x_i - x_j)`` (odd: ``alpha / (x_i prod(x_i^2 - x_j^2))``,
    even: ``alpha / prod(x_i^2 - x_j^2)``).
    """
    points = np.asarray(points, dtype=float)
    logs, signs = _log_products(points, parity)
    inv = -logs
    top = inv.max()
    mags = np.exp(inv - top)
    total = mags.sum()
    weights = signs * mags / total
    log_alpha = -(top + np.log(total))
    return weights, float(np.exp(log_alpha)), float(log_alpha)


def dual_weights(f: TargetFunction, ba: BestApprox, d: int | None = None,
                 parity: str | None = None, tol: float = 1e-7) -> DualWeights:
    """Dual certificate on the reference set of ``ba``; checks strong duality."""
    parity = ba.parity if parity is None else parity
    d = ba.degree if d is None else d
    need = len(basis_indices(d, parity)) + 1
    if len(ba.refs) != need:
        raise ValueError(f"reference set has {len(ba.refs)} points, need {need}")
    g = parity_part(f, parity)
    w, alpha, log_alpha = vandermonde_weights(ba.refs, parity)
    obj = float(np.dot(np.asarray(g(ba.refs), dtype=float), w))
    if obj < 0:
        w, alpha, obj = -w, -alpha, -obj
    if abs(obj - ba.error) > tol * max(1.0, ba.error):
        raise DualityGapError(f"dual objective {obj} vs primal {ba.error}")
    return DualWeights(ba.refs.copy(), w, alpha, obj, parity, log_alpha)


def chebyshev_moments(dw: DualWeights, d: int) -> np.ndarray:
    """sum_i h_i T_k(x_i) over the basis of degree <= d (should vanish)."""
    idx = basis_indices(d, dw.parity)
    return _basis_matrix(dw.points, idx).T @ dw.weights
