"""Symmetric tridiagonal matrices: eigensolves, closed-form entries, inverse
entries and reconstruction from a symmetric spectrum.

Indices in the public functions are 1-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

log = logging.getLogger(__name__)

GAP_REJECT = 1e-6        # reconstruct refuses spectra with a smaller gap
GAP_CLOSED_FORM = 1e-12  # closed-form entries refuse near-degenerate spectra
DIAG_TOL = 1e-8          # reconstructed diagonal must vanish to this level


class EigenError(RuntimeError):
    """The tridiagonal eigensolver did not converge."""


class ConditioningError(ValueError):
    """Spectrum too clustered for a stable computation in double precision."""


class PositivityError(RuntimeError):
    """Reconstruction produced a non-positive off-diagonal entry."""


class SingularMatrixError(ZeroDivisionError):
    """The matrix is (numerically) singular."""


@dataclass(frozen=True)
class TridiagMatrix:
    """Symmetric tridiagonal matrix with diagonal ``diag`` and off-diagonal ``offdiag``."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.diag, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.offdiag, dtype=float)).copy()
        if a.ndim != 1 or a.size < 1:
            raise ValueError("diag must be a non-empty vector")
        if b.shape != (a.size - 1,):
            raise ValueError(f"offdiag must have length {a.size - 1}, got {b.size}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "diag", a)
        object.__setattr__(self, "offdiag", b)

    @classmethod
    def zero_diagonal(cls, offdiag) -> "TridiagMatrix":
        b = np.asarray(offdiag, dtype=float)
        return cls(np.zeros(b.size + 1), b)

    @property
    def n(self) -> int:
        return self.diag.size

    @property
    def has_zero_diagonal(self) -> bool:
        return bool(np.all(self.diag == 0))

    def is_persymmetric(self, rtol: float = 1e-9) -> bool:
        b = self.offdiag
        return bool(np.all(np.abs(b - b[::-1]) <= rtol * max(1.0, np.max(np.abs(b), initial=0))))

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def to_dict(self) -> dict:
        return {"n": self.n, "diag": self.diag.tolist(), "offdiag": self.offdiag.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TridiagMatrix":
        m = cls(d["diag"], d["offdiag"])
        if int(d["n"]) != m.n:
            raise ValueError("n does not match the diagonal length")
        return m


@dataclass(frozen=True)
class SymSpectrum:
    """The multiset {±x_1, ..., ±x_m}, plus 0 when ``includes_zero``."""

    xs: np.ndarray
    includes_zero: bool = False

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.xs, dtype=float)).copy()
        if x.ndim != 1 or x.size < 1:
            raise ValueError("need at least one positive value")
        if np.any(x <= 0) or np.any(x > 1):
            raise ValueError("values must lie in (0, 1]")
        if np.any(np.diff(x) <= 0):
            raise ValueError("values must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "xs", x)
        object.__setattr__(self, "includes_zero", bool(self.includes_zero))

    @property
    def m(self) -> int:
        return self.xs.size

    @property
    def dimension(self) -> int:
        return 2 * self.m + int(self.includes_zero)

    def eigenvalues(self) -> np.ndarray:
        mid = [0.0] if self.includes_zero else []
        return np.concatenate([-self.xs[::-1], mid, self.xs])

    def min_gap(self) -> float:
        return float(np.min(np.diff(self.eigenvalues())))

    def to_dict(self) -> dict:
        return {"xs": self.xs.tolist(), "zero": self.includes_zero}

    @classmethod
    def from_dict(cls, d: dict) -> "SymSpectrum":
        return cls(d["xs"], d.get("zero", False))


@dataclass(frozen=True)
class EigenDecomp:
    values: np.ndarray
    vectors: np.ndarray


def eigen(A: TridiagMatrix) -> EigenDecomp:
    """Full eigendecomposition, eigenvalues ascending."""
    if A.n == 1:
        return EigenDecomp(A.diag.copy(), np.ones((1, 1)))
    try:
        w, v = eigh_tridiagonal(A.diag, A.offdiag, lapack_driver="stev")
    except LinAlgError as exc:
        raise EigenError(f"tridiagonal eigensolver failed: {exc}") from exc
    return EigenDecomp(w, v)


def _apply(f: Callable, x: np.ndarray) -> np.ndarray:
    # evaluate without the [-1, 1] domain check: eigenvalues of a norm-1
    # matrix can exceed 1 by rounding, and callers may pass e.g. 1/x
    g = getattr(f, "evaluator", f)
    return np.asarray(g(x))


def matrix_function(A: TridiagMatrix, f: Callable) -> np.ndarray:
    """Dense f(A) = U f(D) U^T."""
    e = eigen(A)
    return (e.vectors * _apply(f, e.values)) @ e.vectors.T


def entry_f(A: TridiagMatrix, f: Callable, i: int, j: int) -> float:
    """<i| f(A) |j> from the eigendecomposition (1-based)."""
    if not (1 <= i <= A.n and 1 <= j <= A.n):
        raise IndexError(f"indices ({i}, {j}) outside 1..{A.n}")
    e = eigen(A)
    return float(np.sum(e.vectors[i - 1] * _apply(f, e.values) * e.vectors[j - 1]))


def _log_abs_derivative(lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log|g'(lam_i)| and sign g'(lam_i) for g(x) = prod (x - lam_j)."""
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, 1.0)
    return np.sum(np.log(np.abs(diff)), axis=1), np.prod(np.sign(diff), axis=1)


def _closed_form_spectrum(A: TridiagMatrix) -> np.ndarray:
    if not A.has_zero_diagonal:
        raise ValueError("closed forms need a zero diagonal")
    lam = eigen(A).values
    if A.n > 1 and np.min(np.diff(lam)) < GAP_CLOSED_FORM:
        raise ConditioningError("near-degenerate spectrum; closed form is ill-conditioned")
    return lam


def entry_1n_closed(A: TridiagMatrix, f: Callable) -> float:
    """f(A)_{1,n} = b_1...b_{n-1} sum_i f(lam_i) / g'(lam_i)."""
    lam = _closed_form_spectrum(A)
    if A.n == 1:
        return float(_apply(f, lam)[0])
    logg, sg = _log_abs_derivative(lam)
    b = A.offdiag
    logb = np.sum(np.log(np.abs(b)))
    sb = np.prod(np.sign(b))
    return float(sb * np.sum(_apply(f, lam) * sg * np.exp(logb - logg)))


def entry_2n1_closed(A: TridiagMatrix, f: Callable) -> float:
    """f(A)_{2,n-1} = b_2...b_{n-2} sum_i lam_i^2 f(lam_i) / g'(lam_i).

    Valid for zero-diagonal matrices with b_i = b_{n-i}.
    """
    if A.n < 4:
        raise ValueError("need n >= 4")
    if not A.is_persymmetric():
        raise ValueError("closed form needs b_i = b_{n-i}")
    lam = _closed_form_spectrum(A)
    logg, sg = _log_abs_derivative(lam)
    b = A.offdiag[1:-1]
    logb = np.sum(np.log(np.abs(b)))
    sb = np.prod(np.sign(b))
    return float(sb * np.sum(lam**2 * _apply(f, lam) * sg * np.exp(logb - logg)))


def inverse_entry(T: TridiagMatrix, i: int, j: int) -> float:
    """(T^{-1})_{ij} from the theta/phi recurrences (constant diagonal only)."""
    n = T.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"indices ({i}, {j}) outside 1..{n}")
    a = T.diag[0]
    if np.any(T.diag != a):
        raise ValueError("inverse_entry requires a constant diagonal")
    if i > j:
        i, j = j, i
    b2 = T.offdiag**2
    theta = np.empty(n + 1)
    theta[0] = 1.0
    theta[1] = a
    for k in range(2, n + 1):
        theta[k] = a * theta[k - 1] - b2[k - 2] * theta[k - 2]
    phi = np.empty(n + 2)
    phi[n + 1] = 1.0
    phi[n] = a
    for k in range(n - 1, 0, -1):
        phi[k] = a * phi[k + 1] - b2[k - 1] * phi[k + 2]
    scale = max(1.0, abs(a), float(np.max(np.abs(T.offdiag), initial=0.0))) ** n
    if abs(theta[n]) <= 1e-13 * scale:
        raise SingularMatrixError("theta_n vanishes: matrix is singular")
    prod_b = float(np.prod(T.offdiag[i - 1:j - 1]))
    return (-1) ** (j - i) * prod_b * theta[i - 1] * phi[j + 1] / theta[n]


def _lanczos(lam: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lanczos on diag(lam) from unit vector w, full reorthogonalisation."""
    n = lam.size
    Q = np.zeros((n, n))
    alpha = np.zeros(n)
    beta = np.zeros(n - 1)
    Q[:, 0] = w
    for k in range(n):
        r = lam * Q[:, k]
        alpha[k] = Q[:, k] @ r
        if k == n - 1:
            break
        r -= alpha[k] * Q[:, k]
        if k > 0:
            r -= beta[k - 1] * Q[:, k - 1]
        for _ in range(2):
            r -= Q[:, : k + 1] @ (Q[:, : k + 1].T @ r)
        beta[k] = np.linalg.norm(r)
        if beta[k] <= 0:
            raise PositivityError(f"Lanczos breakdown at step {k + 1}")
        Q[:, k + 1] = r / beta[k]
    return alpha, beta


def reconstruct(S: SymSpectrum) -> TridiagMatrix:
    """The unique zero-diagonal, positive, persymmetric tridiagonal matrix
    with spectrum ±S (and 0 if flagged).

    First-coordinate spectral weights are w_i^2 ∝ 1/|g'(lam_i)|; a weighted
    Lanczos run on diag(lam) returns the Jacobi matrix with those weights.
    """
    gap = S.min_gap()
    if gap < GAP_REJECT:
        raise ConditioningError(f"minimum eigenvalue gap {gap:.3g} below {GAP_REJECT}")
    lam = S.eigenvalues()
    logg, _ = _log_abs_derivative(lam)
    logw = -0.5 * logg
    w = np.exp(logw - logw.max())
    w /= np.linalg.norm(w)
    alpha, beta = _lanczos(lam, w)
    if np.max(np.abs(alpha)) > DIAG_TOL:
        raise PositivityError(f"diagonal did not vanish (max {np.max(np.abs(alpha)):.3g})")
    if np.any(beta <= 0):
        raise PositivityError("non-positive off-diagonal entry")
    return TridiagMatrix.zero_diagonal(beta)


def normalization_constant(A: TridiagMatrix, S: SymSpectrum) -> float:
    """Left-hand side of the reconstruction normalisation identity.

    Even dimension 2m: sum_i b_1...b_{2m-1} / (x_i |prod_{j!=i}(x_i^2 - x_j^2)|).
    Odd dimension 2m+1: sum_i b_2...b_{2m-1} / |prod_{j!=i}(x_i^2 - x_j^2)|.
    Both equal 1 for the reconstructed matrix.
    """
    if A.n != S.dimension:
        raise ValueError("matrix and spectrum sizes differ")
    x2 = S.xs**2
    diff = x2[:, None] - x2[None, :]
    np.fill_diagonal(diff, 1.0)
    logp = np.sum(np.log(np.abs(diff)), axis=1)
    if S.includes_zero:
        logb = np.sum(np.log(A.offdiag[1:-1]))
        return float(np.sum(np.exp(logb - logp)))
    logb = np.sum(np.log(A.offdiag))
    return float(np.sum(np.exp(logb - logp - np.log(S.xs))))


def path_matrix(n: int, weight: float = 1.0) -> TridiagMatrix:
    """Adjacency matrix of the n-vertex path with uniform edge weight."""
    return TridiagMatrix.zero_diagonal(np.full(n - 1, float(weight)))
