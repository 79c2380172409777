"""Target functions and Chebyshev-form polynomials on [-1, 1].

Everything polynomial in this package is stored as Chebyshev coefficients
(``T_k`` of the first kind).  Target functions are plain evaluators plus a
parity tag; a small registry builds them from strings such as ``"sin:t=12"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C

PARITIES = ("even", "odd", "none")

_GRID_SIZE = 10_000
_PARITY_TOL = 1e-12
_BOUND_TOL = 1e-12


class DomainError(ValueError):
    """Raised when a point lies outside [-1, 1]."""


def _check_grid() -> np.ndarray:
    uniform = np.linspace(-1.0, 1.0, _GRID_SIZE)
    cheb = np.cos(np.pi * np.arange(513) / 512)
    return np.concatenate([uniform, cheb])


def _in_domain(x) -> None:
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise DomainError(f"point outside [-1, 1]: {x}")


@dataclass(frozen=True)
class TargetFunction:
    """A bounded function on [-1, 1] with declared parity.

    ``evaluator`` must be vectorised over numpy arrays.  Registry functions are
    entire, so they also accept complex arguments (needed by the contour
    estimator).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str = "f"
    declared_parity: str = "none"
    bound: float = 1.0
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.declared_parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}")
        if not self.check:
            return
        grid = _check_grid()
        vals = np.asarray(self.evaluator(grid), dtype=float)
        if np.max(np.abs(vals)) > self.bound + _BOUND_TOL:
            raise ValueError(f"{self.label}: |f| exceeds {self.bound} on [-1, 1]")
        if self.declared_parity != "none":
            mirror = np.asarray(self.evaluator(-grid), dtype=float)
            sign = 1.0 if self.declared_parity == "even" else -1.0
            if np.max(np.abs(vals - sign * mirror)) > _PARITY_TOL:
                raise ValueError(f"{self.label} is not {self.declared_parity}")

    def __call__(self, x):
        return self.evaluator(x)


def eval_function(f: TargetFunction, x):
    _in_domain(x)
    return f.evaluator(x)


@dataclass(frozen=True)
class ChebPoly:
    """Polynomial sum_k c_k T_k(x) with trailing zeros trimmed."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return C.chebval(x, self.coeffs)

    def to_monomial(self) -> np.ndarray:
        return C.cheb2poly(self.coeffs)

    def as_function(self, label: str | None = None, check: bool = True) -> TargetFunction:
        c = self.coeffs
        even = np.all(c[1::2] == 0)
        odd = np.all(c[0::2] == 0)
        parity = "even" if even else ("odd" if odd else "none")
        return TargetFunction(lambda x: C.chebval(x, c), label or f"chebpoly[{self.degree}]",
                              parity, check=check)


def eval_poly(p: ChebPoly, x):
    """Clenshaw evaluation of ``p`` at ``x`` in [-1, 1]."""
    _in_domain(x)
    c = p.coeffs
    x = np.asarray(x, dtype=float)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for ck in c[:0:-1]:
        b1, b2 = ck + 2.0 * x * b1 - b2, b1
    return c[0] + x * b1 - b2


@dataclass(frozen=True)
class ParityParts:
    even: TargetFunction
    odd: TargetFunction


def parity_split(f: TargetFunction) -> ParityParts:
    g = f.evaluator
    even = TargetFunction(lambda x: 0.5 * (g(x) + g(-x)), f"even({f.label})", "even")
    odd = TargetFunction(lambda x: 0.5 * (g(x) - g(-x)), f"odd({f.label})", "odd")
    return ParityParts(even, odd)


def parity_part(f: TargetFunction, parity: str) -> TargetFunction:
    if parity == "none" or f.declared_parity == parity:
        return f
    parts = parity_split(f)
    return parts.even if parity == "even" else parts.odd


def cheb_points(d: int) -> np.ndarray:
    """The d+1 Chebyshev points of the second kind, ascending."""
    if d == 0:
        return np.zeros(1)
    return np.sin(np.pi * np.arange(-d, d + 1, 2) / (2 * d))


def cheb_fit(f: TargetFunction, d: int) -> ChebPoly:
    if d < 0:
        raise ValueError("degree must be >= 0")
    x = cheb_points(d)
    vals = np.asarray(f(x), dtype=float)
    if d == 0:
        return ChebPoly(vals)
    # DCT-I on the extrema grid; reorder to cos(pi j / d), j = 0..d
    v = vals[::-1]
    j = np.arange(d + 1)
    w = np.ones(d + 1)
    w[0] = w[-1] = 0.5
    coeffs = (2.0 / d) * np.cos(np.pi * np.outer(j, j) / d) @ (w * v)
    coeffs[0] /= 2
    coeffs[-1] /= 2
    return ChebPoly(coeffs)


# --- registry ---------------------------------------------------------------

def _sin(t):
    return TargetFunction(lambda x: np.sin(t * x), f"sin:t={t:.17g}", "odd")


def _cos(t):
    return TargetFunction(lambda x: np.cos(t * x), f"cos:t={t:.17g}", "even")


def _power(d):
    d = int(d)
    return TargetFunction(lambda x: np.asarray(x) ** d, f"power:d={d}",
                          "even" if d % 2 == 0 else "odd")


def _cheb(d):
    d = int(d)
    c = np.zeros(d + 1)
    c[d] = 1.0
    return TargetFunction(lambda x: C.chebval(x, c), f"cheb:d={d}",
                          "even" if d % 2 == 0 else "odd")


def _exp(t):
    return TargetFunction(lambda x: np.exp(t * (np.asarray(x) - 1.0)), f"exp:t={t:.17g}", "none")


def _const(c):
    return TargetFunction(lambda x: np.full(np.shape(x), c, dtype=np.result_type(x, float)),
                          f"const:c={c:.17g}", "even")


REGISTRY = {
    "sin": (_sin, "t"),
    "cos": (_cos, "t"),
    "power": (_power, "d"),
    "cheb": (_cheb, "d"),
    "exp": (_exp, "t"),
    "const": (_const, "c"),
}


def parse_function(spec: str) -> TargetFunction:
    """Build a registry function from ``"name:key=value"``."""
    name, _, rest = spec.partition(":")
    if name not in REGISTRY:
        raise ValueError(f"unknown function {name!r}; known: {sorted(REGISTRY)}")
    builder, key = REGISTRY[name]
    params = dict(kv.split("=", 1) for kv in rest.split(",") if kv)
    if set(params) != {key}:
        raise ValueError(f"{name} takes exactly one parameter {key!r}, got {sorted(params)}")
    return builder(float(params[key]))
