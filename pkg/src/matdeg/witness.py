"""Witness tridiagonal matrices whose f(A) entry equals a best-approximation error.

Odd part: the l+2 reference points x_i of the odd-restricted minimax problem
become the spectrum {±x_i} of a 2l+4 dimensional matrix, and
<1|f(A)|n> reproduces the dual objective.  Even part: spectrum {0, ±x_i},
dimension 2l+5, entry <2|f(A)|n-1>.

With every off-diagonal entry positive the entry equals ``sign * Val`` where
the sign is fixed by the spectrum; certificates record it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .approxdeg import (BestApprox, DualWeights, _initial_refs, approx_degree,
                        basis_indices, best_approx, vandermonde_weights)
from .funcspace import TargetFunction, parity_part, parse_function
from .tridiag import (SymSpectrum, TridiagMatrix, eigen, entry_f, normalization_constant,
                      reconstruct)

log = logging.getLogger(__name__)

CERT_TOL = 1e-6
ZERO_NUDGE = 1e-5  # replaces a reference point at 0; must exceed the gap floor
NORM_TOL = 1e-12
EXACT_TOL = 1e-14


class WitnessError(RuntimeError):
    pass


def offset_c(d: int, parity: str) -> int:
    """Dimension offset: n = d + c."""
    if parity == "odd":
        return 2 if d % 2 == 0 else 3
    if parity == "even":
        return 5 if d % 2 == 0 else 4
    raise ValueError(f"bad parity {parity!r}")


def entry_indices(n: int, parity: str) -> tuple[int, int]:
    return (1, n) if parity == "odd" else (2, n - 1)


@dataclass(frozen=True)
class WitnessCertificate:
    matrix: TridiagMatrix
    entry_indices: tuple[int, int]
    claimed_value: float
    achieved_value: float
    degree_d: int
    parity: str
    dim_offset_c: int
    function: str = ""
    eps: float = 0.0
    val: float = 0.0
    sign: int = 1
    refs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual: DualWeights | None = None
    normalization: float = 1.0
    nudged: bool = False

    @property
    def n(self) -> int:
        return self.matrix.n

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "parity": self.parity,
            "eps": self.eps,
            "degree_d": self.degree_d,
            "dim_offset_c": self.dim_offset_c,
            "entry_indices": list(self.entry_indices),
            "claimed_value": self.claimed_value,
            "achieved_value": self.achieved_value,
            "val": self.val,
            "sign": self.sign,
            "refs": np.asarray(self.refs).tolist(),
            "dual_weights": self.dual.to_dict() if self.dual is not None else None,
            "normalization": self.normalization,
            "nudged": self.nudged,
            "matrix": self.matrix.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessCertificate":
        dual = DualWeights.from_dict(d["dual_weights"]) if d.get("dual_weights") else None
        return cls(TridiagMatrix.from_dict(d["matrix"]), tuple(d["entry_indices"]),
                   float(d["claimed_value"]), float(d["achieved_value"]), int(d["degree_d"]),
                   d["parity"], int(d["dim_offset_c"]), d.get("function", ""),
                   float(d.get("eps", 0.0)), float(d.get("val", 0.0)), int(d.get("sign", 1)),
                   np.array(d.get("refs", [])), dual, float(d.get("normalization", 1.0)),
                   bool(d.get("nudged", False)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "WitnessCertificate":
        return cls.from_dict(json.loads(text))


def _prepare_refs(refs: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.sort(np.asarray(refs, dtype=float))
    nudged = False
    if x[0] < ZERO_NUDGE:
        if x.size > 1 and x[1] <= 2 * ZERO_NUDGE:
            raise WitnessError("reference point at 0 cannot be nudged: neighbour too close")
        x[0] = ZERO_NUDGE
        nudged = True
    if x[-1] > 1.0:
        raise WitnessError("reference points exceed 1")
    return x, nudged


def _signed_objective(g: TargetFunction, x: np.ndarray, parity: str) -> DualWeights:
    """Dual weights with alpha > 0 (the orientation realised by b_i > 0)."""
    w, alpha, log_alpha = vandermonde_weights(x, parity)
    obj = float(np.dot(np.asarray(g(x), dtype=float), w))
    return DualWeights(x.copy(), w, alpha, obj, parity, log_alpha)


def _certificate(f: TargetFunction, parity: str, d: int, ba: BestApprox,
                 eps: float) -> WitnessCertificate:
    g = parity_part(f, parity)
    refs = ba.refs
    if ba.error <= EXACT_TOL:
        # exactly representable: any admissible reference set certifies Val = 0
        refs = _initial_refs(basis_indices(d, parity), parity)
    x, nudged = _prepare_refs(refs)
    if nudged:
        log.info("%s: reference at 0 nudged to %g", f.label, ZERO_NUDGE)
    dual = _signed_objective(g, x, parity)
    S = SymSpectrum(x, includes_zero=(parity == "even"))
    A = reconstruct(S)
    i, j = entry_indices(A.n, parity)
    achieved = entry_f(A, f, i, j)
    c = offset_c(d, parity)
    if A.n != d + c:
        raise WitnessError(f"dimension {A.n} != d + c = {d + c}")
    sign = 1 if dual.objective >= 0 else -1
    return WitnessCertificate(A, (i, j), dual.objective, achieved, d, parity, c, f.label,
                              eps, ba.error, sign, x, dual, normalization_constant(A, S),
                              nudged)


def build_odd_witness(f: TargetFunction, eps: float) -> WitnessCertificate:
    """Witness for the odd part of f: <1|f(A)|n> = ±Val(f_odd, d), d = deg_eps(f_odd)."""
    d, ba = approx_degree(parity_part(f, "odd"), eps, "odd")
    return _certificate(f, "odd", d, ba, eps)


def build_even_witness(f: TargetFunction, eps: float) -> WitnessCertificate:
    """Witness for the even part of f: <2|f(A)|n-1> = ±Val(f_even, d)."""
    d, ba = approx_degree(parity_part(f, "even"), eps, "even")
    return _certificate(f, "even", d, ba, eps)


def witness_matrix_of_size(f: TargetFunction, n: int) -> WitnessCertificate:
    """Witness of a prescribed dimension n >= 2.

    Even n uses the odd part at degree n-3, odd n >= 5 the even part at
    degree n-4.  If that part is approximated exactly (Val = 0), the
    reference set falls back to the Chebyshev extrema, which still gives a
    valid zero-diagonal persymmetric matrix (with a zero entry).
    """
    if n < 2 or n == 3:
        raise ValueError("n must be even >= 2 or odd >= 5")
    parity = "odd" if n % 2 == 0 else "even"
    d = n - 3 if parity == "odd" else n - 4
    d = max(d, 0)
    g = parity_part(f, parity)
    ba = best_approx(g, d, parity)
    cert = _certificate(f, parity, d, ba, ba.error)
    if cert.n != n:
        raise WitnessError(f"built dimension {cert.n}, wanted {n}")
    return cert


def certify_lower_bound(A: TridiagMatrix, f: TargetFunction, eps: float, parity: str) -> int:
    """Lower bound n - c on deg_eps(f_parity) when the witness entry exceeds eps, else 0.

    Any polynomial of degree <= n-2 (odd entry) or <= n-4 (even entry) has
    a vanishing entry, so |entry| > eps rules those degrees out.
    """
    if not A.has_zero_diagonal:
        raise ValueError("witness matrices have zero diagonal")
    i, j = entry_indices(A.n, parity)
    value = entry_f(A, f, i, j)
    if abs(value) <= eps:
        return 0
    if parity == "odd":
        c = 2 if A.n % 2 == 0 else 3
    else:
        c = 4 if A.n % 2 == 1 else 5
    return max(A.n - c, 0)


def nff_matrix(m: int) -> TridiagMatrix:
    """Size-2m matrix with b_i = sqrt(i(2m-i))/(2m-1), spectrum ±(2i-1)/(2m-1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    i = np.arange(1, 2 * m)
    denom = max(2 * m - 1, 1)
    return TridiagMatrix.zero_diagonal(np.sqrt(i * (2 * m - i)) / denom)


def _extrema(f: TargetFunction, n_grid: int = 200_001):
    x = np.linspace(0.0, 1.0, n_grid)[1:]
    y = np.asarray(f(x), dtype=float)
    ay = np.abs(y)
    peak = np.zeros(ay.size, bool)
    peak[1:-1] = (ay[1:-1] >= ay[:-2]) & (ay[1:-1] >= ay[2:])
    peak[-1] = ay[-1] >= ay[-2]
    idx = np.flatnonzero(peak)
    pts = x[idx].copy()
    inner = idx < ay.size - 1
    if np.any(inner):
        lo = x[np.maximum(idx[inner] - 1, 0)]
        hi = x[idx[inner] + 1]
        g = (np.sqrt(5.0) - 1.0) / 2.0
        for _ in range(60):
            c = hi - g * (hi - lo)
            e = lo + g * (hi - lo)
            left = np.abs(f(c)) > np.abs(f(e))
            hi = np.where(left, e, hi)
            lo = np.where(left, lo, c)
        pts[inner] = 0.5 * (lo + hi)
    return pts, np.asarray(f(pts), dtype=float)


def periodic_witness_points(f: TargetFunction, m: int | None = None,
                            tol: float = 1e-9) -> SymSpectrum:
    """The m smallest points in (0, 1] where f alternately reaches +1 and -1.

    With ``m=None`` all alternation points are returned.
    """
    pts, vals = _extrema(f)
    hit = np.abs(np.abs(vals) - 1.0) <= tol
    pts, vals = pts[hit], vals[hit]
    keep_x, keep_s = [], []
    for x, v in zip(pts, vals):
        s = np.sign(v)
        if keep_s and keep_s[-1] == s:
            continue
        keep_x.append(x)
        keep_s.append(s)
    if not keep_x or (m is not None and len(keep_x) < m):
        found = len(keep_x)
        raise WitnessError(f"{f.label}: found {found} alternation points, need {m or 1}")
    xs = np.array(keep_x if m is None else keep_x[:m])
    return SymSpectrum(np.minimum(xs, 1.0))


def verify(cert: WitnessCertificate, f: TargetFunction | None = None,
           tol: float = CERT_TOL) -> tuple[bool, list[str]]:
    """Re-check a certificate from its matrix alone. Returns (ok, problems)."""
    problems = []
    if f is None:
        f = parse_function(cert.function)
    A = cert.matrix
    if not A.has_zero_diagonal:
        problems.append("diagonal is not zero")
    if np.any(A.offdiag <= 0):
        problems.append("off-diagonal not strictly positive")
    if A.n != cert.degree_d + cert.dim_offset_c:
        problems.append(f"n={A.n} != d + c = {cert.degree_d + cert.dim_offset_c}")
    if cert.dim_offset_c != offset_c(cert.degree_d, cert.parity):
        problems.append("offset c does not match the degree parity")
    if tuple(cert.entry_indices) != entry_indices(A.n, cert.parity):
        problems.append("entry indices do not match the parity")
    values = eigen(A).values
    if np.max(np.abs(values)) > 1.0 + NORM_TOL:
        problems.append(f"spectral radius {np.max(np.abs(values)):.6g} exceeds 1")
    if len(cert.refs):
        S = SymSpectrum(cert.refs, includes_zero=(cert.parity == "even"))
        if S.dimension != A.n or np.max(np.abs(values - S.eigenvalues())) > 1e-8:
            problems.append("spectrum does not match the reference points")
    i, j = cert.entry_indices
    achieved = entry_f(A, f, i, j)
    if abs(achieved - cert.claimed_value) > tol:
        problems.append(f"entry {achieved:.12g} differs from claimed {cert.claimed_value:.12g}")
    return (not problems), problems
