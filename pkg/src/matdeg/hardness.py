"""Reduction instances: parity graphs, clock Hamiltonians and Forrelation circuits.

Vertex (i, t) of a parity graph, i in 0..n and t in {0, 1}, has 1-based
index 2i + t + 1.  The even variant adds pendant vertices (-1, t) and
(n+1, t); there the index is 2(i+1) + t + 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sparsemat import SparseHermitian
from .tridiag import TridiagMatrix, entry_f

UNITARY_TOL = 1e-10
MAX_FORRELATION_QUBITS = 12
MAX_DENSE_QUBITS = 6


def _apply(f: Callable, x):
    return np.asarray(getattr(f, "evaluator", f)(x))


def dense_function(M: np.ndarray, f: Callable) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    return (V * _apply(f, w)) @ V.conj().T


# --- parity graph --------------------------------------------------------------

@dataclass(frozen=True)
class ParityInstance:
    bits: np.ndarray
    weights: np.ndarray
    matrix: SparseHermitian
    even_variant: bool = False

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def parity(self) -> int:
        return int(np.sum(self.bits) % 2)

    def index(self, i: int, t: int) -> int:
        """1-based matrix index of vertex (i, t)."""
        return 2 * (i + 1) + t + 1 if self.even_variant else 2 * i + t + 1

    def source_target(self) -> tuple[int, int]:
        return self.index(0, 0), self.index(self.n, 1)

    def entry(self, f: Callable) -> float:
        """<(0,0)| f(A) |(n,1)> from a dense eigendecomposition."""
        src, dst = self.source_target()
        F = dense_function(self.matrix.dense(), f)
        return float(np.real(F[src - 1, dst - 1]))

    def path_value(self, f: Callable) -> float:
        """The same entry on the bare weighted path (the odd-parity value)."""
        T = TridiagMatrix.zero_diagonal(self.weights)
        if self.even_variant:
            return entry_f(T, f, 2, T.n - 1)
        return entry_f(T, f, 1, T.n)

    def to_dict(self) -> dict:
        return {"kind": "parity", "bits": self.bits.tolist(),
                "weights": self.weights.tolist(), "even_variant": self.even_variant}


def parity_graph(bits, weights, even_variant: bool = False) -> ParityInstance:
    """Weighted graph with edges (i-1, t) -- (i, t xor x_i) of weight b_i.

    It is two disjoint paths; (0, 0) and (n, 1) lie on the same one exactly
    when the bits have odd parity.  In the even variant ``weights`` has n+2
    entries: the first and last weigh the pendant edges (-1, t) -- (0, t) and
    (n, t) -- (n+1, t).
    """
    x = np.asarray(bits, dtype=int)
    b = np.asarray(weights, dtype=float)
    if np.any((x != 0) & (x != 1)):
        raise ValueError("bits must be 0/1")
    n = x.size
    need = n + 2 if even_variant else n
    if b.size != need:
        raise ValueError(f"need {need} weights for {n} bits, got {b.size}")
    off = 1 if even_variant else 0

    def idx(i, t):
        return 2 * (i + off) + t + 1

    entries = []
    core = b[1:-1] if even_variant else b
    for i in range(1, n + 1):
        for t in (0, 1):
            a, c = idx(i - 1, t), idx(i, t ^ x[i - 1])
            entries.append((min(a, c), max(a, c), core[i - 1]))
    size = 2 * (n + 1)
    if even_variant:
        for t in (0, 1):
            entries.append((idx(-1, t), idx(0, t), b[0]))
            entries.append((idx(n, t), idx(n + 1, t), b[-1]))
        size += 4
    A = SparseHermitian.from_entries(size, entries, sparsity=2)
    return ParityInstance(x, b, A, even_variant)


def all_bit_strings(n: int) -> np.ndarray:
    return ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(int)


# --- clock Hamiltonian ---------------------------------------------------------

@dataclass(frozen=True)
class ClockInstance:
    unitaries: tuple
    weights: np.ndarray
    hamiltonian: SparseHermitian
    inner_dim: int

    @property
    def N(self) -> int:
        return self.weights.size + 1

    def history_states(self, start: np.ndarray | None = None) -> np.ndarray:
        """Columns psi_t = |t> (x) U_t ... U_1 |start>, t = 0..N-1."""
        D = self.inner_dim
        v = np.zeros(D, dtype=complex)
        if start is None:
            v[0] = 1.0
        else:
            v[:] = start
        out = np.zeros((self.N * D, self.N), dtype=complex)
        out[:D, 0] = v
        for t, U in enumerate(self.unitaries, start=1):
            v = U @ v
            out[t * D:(t + 1) * D, t] = v
        return out

    def reduced(self) -> TridiagMatrix:
        return TridiagMatrix.zero_diagonal(self.weights)

    def to_dict(self) -> dict:
        def enc(U):
            return {"re": np.real(U).tolist(), "im": np.imag(U).tolist()}
        return {"kind": "clock", "weights": self.weights.tolist(),
                "unitaries": [enc(U) for U in self.unitaries]}


def clock_hamiltonian(unitaries, weights) -> ClockInstance:
    """A = sum_t b_t (|t><t-1| (x) U_t + |t-1><t| (x) U_t^dagger)."""
    Us = [np.asarray(U) for U in unitaries]
    b = np.asarray(weights, dtype=float)
    if len(Us) != b.size:
        raise ValueError("need one weight per unitary")
    if not Us:
        raise ValueError("need at least one unitary")
    D = Us[0].shape[0]
    for k, U in enumerate(Us, start=1):
        if U.shape != (D, D):
            raise ValueError(f"U_{k} has shape {U.shape}, expected {(D, D)}")
        if np.max(np.abs(U.conj().T @ U - np.eye(D))) > UNITARY_TOL:
            raise ValueError(f"U_{k} is not unitary")
    N = b.size + 1
    real = all(not np.iscomplexobj(U) or np.all(U.imag == 0) for U in Us)
    H = np.zeros((N * D, N * D), dtype=float if real else complex)
    for t, (U, bt) in enumerate(zip(Us, b), start=1):
        block = bt * (U.real if real else U)
        H[t * D:(t + 1) * D, (t - 1) * D:t * D] = block
        H[(t - 1) * D:t * D, t * D:(t + 1) * D] = block.conj().T
    s = max(int(np.max(np.count_nonzero(H, axis=1))), 1)
    inst = ClockInstance(tuple(Us), b, SparseHermitian.from_dense(H, sparsity=s), D)
    Psi = inst.history_states()
    R = Psi.conj().T @ H @ Psi
    if np.max(np.abs(R - inst.reduced().dense())) > 1e-9:
        raise RuntimeError("history states do not reduce A to the tridiagonal walk")
    return inst


# --- Forrelation -------------------------------------------------------------

def _walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """H^{(x)n} v for a length-2^n vector (normalised)."""
    v = np.array(v, dtype=complex)
    h = 1
    while h < v.size:
        v = v.reshape(-1, 2, h)
        v = np.stack([v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]], axis=1).reshape(-1)
        h *= 2
    return v / np.sqrt(v.size)


@dataclass(frozen=True)
class ForrelationInstance:
    n: int
    g1: np.ndarray
    g2: np.ndarray
    phi: float

    def to_dict(self) -> dict:
        return {"kind": "forrelation", "n": self.n, "g1": self.g1.tolist(),
                "g2": self.g2.tolist(), "phi": self.phi}


def forrelation_value(g1, g2) -> float:
    """<0| H D1 H D2 H |0> by statevector simulation."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    v = np.zeros(g1.size, dtype=complex)
    v[0] = 1.0
    v = _walsh_hadamard(v)
    v = _walsh_hadamard(g2 * v)
    v = _walsh_hadamard(g1 * v)
    return float(np.real(v[0]))


def forrelation_instance(n: int, g1, g2) -> ForrelationInstance:
    if not 1 <= n <= MAX_FORRELATION_QUBITS:
        raise ValueError(f"n must lie in 1..{MAX_FORRELATION_QUBITS}")
    g1 = np.asarray(g1, dtype=int)
    g2 = np.asarray(g2, dtype=int)
    for g in (g1, g2):
        if g.shape != (2**n,) or np.any(np.abs(g) != 1):
            raise ValueError("truth tables must be ±1 vectors of length 2^n")
    return ForrelationInstance(n, g1, g2, forrelation_value(g1, g2))


def random_forrelation(n: int, rng) -> ForrelationInstance:
    rng = np.random.default_rng(rng)
    g1 = rng.choice([-1, 1], size=2**n)
    g2 = rng.choice([-1, 1], size=2**n)
    return forrelation_instance(n, g1, g2)


def hadamard_factor(n: int, q: int) -> np.ndarray:
    """H acting on qubit q (0 = most significant) of n qubits; 2-sparse."""
    H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return np.kron(np.kron(np.eye(2**q), H), np.eye(2 ** (n - q - 1)))


def forrelation_unitaries(inst: ForrelationInstance) -> list[np.ndarray]:
    """U_1..U_{N-1}: n H factors, D_2, n H factors, D_1, n H factors (N = 3(n+1))."""
    n = inst.n
    Hs = [hadamard_factor(n, q) for q in range(n)]
    return Hs + [np.diag(inst.g2.astype(float))] + Hs + [np.diag(inst.g1.astype(float))] + Hs


def forrelation_identity_check(inst: ForrelationInstance, f: Callable, weights):
    """(lhs, rhs, residual) for <phi_{N-1}|f(A)|psi_0> = <psi_{N-1}|f(A)|psi_0> * Phi."""
    if inst.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense check limited to n <= {MAX_DENSE_QUBITS}")
    Us = forrelation_unitaries(inst)
    clock = clock_hamiltonian(Us, weights)
    D, N = clock.inner_dim, clock.N
    F = dense_function(clock.hamiltonian.dense(), f)
    Psi = clock.history_states()
    psi0, psiN = Psi[:, 0], Psi[:, N - 1]
    phiN = np.zeros(N * D)
    phiN[(N - 1) * D] = 1.0
    lhs = complex(phiN @ F @ psi0)
    rhs = complex(psiN.conj() @ F @ psi0) * inst.phi
    return lhs, rhs, abs(lhs - rhs)


# --- bundles ------------------------------------------------------------------

@dataclass
class HardnessBundle:
    """Replayable instance description plus the function used to probe it."""

    kind: str
    payload: dict
    function: str = "sin:t=5"
    results: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "function": self.function,
                           "payload": self.payload, "results": self.results}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "HardnessBundle":
        d = json.loads(text)
        return cls(d["kind"], d["payload"], d.get("function", "sin:t=5"), d.get("results", {}))


def instance_from_payload(kind: str, payload: dict):
    if kind == "parity":
        return parity_graph(payload["bits"], payload["weights"], payload.get("even_variant", False))
    if kind == "forrelation":
        return forrelation_instance(payload["n"], payload["g1"], payload["g2"])
    if kind == "clock":
        Us = [np.array(u["re"]) + 1j * np.array(u["im"]) for u in payload["unitaries"]]
        Us = [U.real if np.all(U.imag == 0) else U for U in Us]
        return clock_hamiltonian(Us, payload["weights"])
    raise ValueError(f"unknown instance kind {kind!r}")
