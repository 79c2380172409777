"""Sparse Hermitian matrices behind a position oracle and an entry oracle.

Indices are 1-based.  ``OracleAccess`` is the only read path the estimators
use; every oracle answer is tallied in a ``QueryCounter``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tridiag import TridiagMatrix

HERMITIAN_TOL = 1e-12


class OracleRangeError(IndexError):
    """Ordinal or index outside the oracle's domain."""


@dataclass(frozen=True)
class SparseHermitian:
    """Row-compressed Hermitian matrix.

    ``cols[i]`` holds the sorted 1-based column indices of row ``i+1`` and
    ``vals[i]`` the matching values.
    """

    n: int
    cols: tuple
    vals: tuple
    sparsity: int

    @classmethod
    def from_dense(cls, M, sparsity: int | None = None, tol: float = 0.0) -> "SparseHermitian":
        M = np.asarray(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        if np.max(np.abs(M - M.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("matrix is not Hermitian")
        real = not np.iscomplexobj(M) or np.all(M.imag == 0)
        M = M.real.astype(float) if real else M.astype(complex)
        cols, vals = [], []
        for row in M:
            nz = np.flatnonzero(np.abs(row) > tol)
            cols.append(nz + 1)
            vals.append(row[nz].copy())
        return cls._build(M.shape[0], cols, vals, sparsity)

    @classmethod
    def from_entries(cls, n: int, entries, sparsity: int | None = None) -> "SparseHermitian":
        """Build from (i, j, value) triples given for i <= j; mirrors the rest."""
        dense = {}
        for i, j, v in entries:
            i, j = int(i), int(j)
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"entry ({i}, {j}) outside 1..{n}")
            if i == j and np.imag(v) != 0:
                raise ValueError(f"diagonal entry ({i}, {i}) must be real")
            for key, val in (((i, j), v), ((j, i), np.conj(v))):
                if key in dense and abs(dense[key] - val) > HERMITIAN_TOL:
                    raise ValueError(f"conflicting values at {key}")
                dense[key] = val
        real = all(np.imag(v) == 0 for v in dense.values())
        dtype = float if real else complex
        rows: list[dict] = [dict() for _ in range(n)]
        for (i, j), v in dense.items():
            if v != 0:
                rows[i - 1][j] = v
        cols = [np.array(sorted(r), dtype=int) for r in rows]
        vals = [np.array([r[c] for c in sorted(r)], dtype=dtype) for r in rows]
        return cls._build(n, cols, vals, sparsity)

    @classmethod
    def _build(cls, n, cols, vals, sparsity):
        counts = [len(c) for c in cols]
        s = max(counts, default=0)
        if sparsity is None:
            sparsity = max(s, 1)
        if s > sparsity:
            raise ValueError(f"row with {s} nonzeros exceeds sparsity {sparsity}")
        cols = tuple(np.asarray(c, dtype=int) for c in cols)
        vals = tuple(np.asarray(v) for v in vals)
        for arr in cols + vals:
            arr.setflags(write=False)
        return cls(int(n), cols, vals, int(sparsity))

    @property
    def is_real(self) -> bool:
        return all(not np.iscomplexobj(v) for v in self.vals)

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.n), dtype=float if self.is_real else complex)
        for i, (c, v) in enumerate(zip(self.cols, self.vals)):
            M[i, c - 1] = v
        return M

    def to_dict(self) -> dict:
        entries = []
        for i, (c, v) in enumerate(zip(self.cols, self.vals), start=1):
            for j, x in zip(c, v):
                if j >= i:
                    entries.append([i, int(j), float(np.real(x)), float(np.imag(x))])
        return {"n": self.n, "sparsity": self.sparsity, "entries": entries}

    @classmethod
    def from_dict(cls, d: dict) -> "SparseHermitian":
        entries = []
        for e in d["entries"]:
            i, j, re = e[0], e[1], e[2]
            im = e[3] if len(e) > 3 else 0.0
            if i > j:
                i, j, im = j, i, -im
            entries.append((i, j, complex(re, im) if im else float(re)))
        return cls.from_entries(int(d["n"]), entries, d.get("sparsity"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SparseHermitian":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class QueryCounter:
    """Tallies of position-oracle (o1) and entry-oracle (o2) answers."""

    o1: int = 0
    o2: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, o1: int = 0, o2: int = 0) -> None:
        if o1 < 0 or o2 < 0:
            raise ValueError("query counts only grow")
        with self._lock:
            self.o1 += int(o1)
            self.o2 += int(o2)

    @property
    def total(self) -> int:
        return self.o1 + self.o2

    def snapshot(self) -> "QueryCounter":
        with self._lock:
            return QueryCounter(self.o1, self.o2)

    def __add__(self, other: "QueryCounter") -> "QueryCounter":
        return QueryCounter(self.o1 + other.o1, self.o2 + other.o2)

    def to_dict(self) -> dict:
        return {"o1": self.o1, "o2": self.o2}


class OracleAccess:
    """The two oracles over a SparseHermitian, with query accounting.

    ``position_oracle(i, k)`` returns the column of the k-th nonzero in row i,
    or ``None`` when row i has fewer than k nonzeros (k <= s).  Batched
    variants count one query per element.
    """

    __slots__ = ("_A", "counter")

    def __init__(self, A: SparseHermitian, counter: QueryCounter | None = None):
        self._A = A
        self.counter = counter if counter is not None else QueryCounter()

    @property
    def n(self) -> int:
        return self._A.n

    @property
    def sparsity(self) -> int:
        return self._A.sparsity

    @property
    def is_real(self) -> bool:
        return self._A.is_real

    def _check_row(self, i: int) -> None:
        if not 1 <= i <= self._A.n:
            raise OracleRangeError(f"row {i} outside 1..{self._A.n}")

    def position_oracle(self, i: int, k: int):
        self._check_row(i)
        if not 1 <= k <= self._A.sparsity:
            raise OracleRangeError(f"ordinal {k} outside 1..{self._A.sparsity}")
        self.counter.add(o1=1)
        row = self._A.cols[i - 1]
        return int(row[k - 1]) if k <= row.size else None

    def entry_oracle(self, i: int, j: int):
        self._check_row(i)
        self._check_row(j)
        self.counter.add(o2=1)
        row = self._A.cols[i - 1]
        p = np.searchsorted(row, j)
        if p < row.size and row[p] == j:
            return self._A.vals[i - 1][p]
        return 0.0

    def row_positions(self, i: int) -> np.ndarray:
        """All s position answers for row i; absent slots are 0. Costs s queries."""
        self._check_row(i)
        s = self._A.sparsity
        self.counter.add(o1=s)
        out = np.zeros(s, dtype=int)
        row = self._A.cols[i - 1]
        out[: row.size] = row
        return out

    def positions_batch(self, rows: np.ndarray) -> np.ndarray:
        """Position answers for every (row, ordinal); shape (len(rows), s), 0 = absent."""
        rows = np.asarray(rows, dtype=int)
        if rows.size and (rows.min() < 1 or rows.max() > self._A.n):
            raise OracleRangeError("row index out of range")
        s = self._A.sparsity
        self.counter.add(o1=rows.size * s)
        table = self._position_table()
        return table[rows - 1]

    def entries_batch(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Entry answers A[rows, cols] elementwise; one query per element.

        Index 0 marks an absent slot: it costs nothing and yields 0.
        """
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        rows, cols = np.broadcast_arrays(rows, cols)
        valid = (rows > 0) & (cols > 0)
        self.counter.add(o2=int(np.count_nonzero(valid)))
        table_c = self._position_table()
        table_v = self._value_table()
        out = np.zeros(rows.shape, dtype=table_v.dtype)
        if np.any(valid):
            r = rows[valid] - 1
            hit = table_c[r] == cols[valid][:, None]
            out[valid] = np.sum(np.where(hit, table_v[r], 0), axis=1)
        return out

    def neighbours_batch(self, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """For each node k: all s positions k' of row k and the entries A[k', k].

        Same charge as ``positions_batch`` followed by ``entries_batch`` on
        the returned positions: s position queries plus one entry query per
        nonzero.
        """
        nodes = np.asarray(nodes, dtype=int)
        if nodes.size and (nodes.min() < 1 or nodes.max() > self._A.n):
            raise OracleRangeError("row index out of range")
        pos_t, val_t = _tables(self._A)
        pos = pos_t[nodes - 1]
        self.counter.add(o1=pos.size, o2=int(np.count_nonzero(pos)))
        vals = val_t[nodes - 1]
        # A[k', k] = conj(A[k, k']) for Hermitian A
        return pos, (vals if self._A.is_real else vals.conj())

    # padded (n, s) tables; internal, built once per matrix
    def _position_table(self) -> np.ndarray:
        return _tables(self._A)[0]

    def _value_table(self) -> np.ndarray:
        return _tables(self._A)[1]


_TABLE_CACHE: dict[int, tuple] = {}


def _tables(A: SparseHermitian):
    key = id(A)
    hit = _TABLE_CACHE.get(key)
    if hit is not None and hit[0] is A:
        return hit[1], hit[2]
    s = A.sparsity
    pos = np.zeros((A.n, s), dtype=int)
    val = np.zeros((A.n, s), dtype=float if A.is_real else complex)
    for i, (c, v) in enumerate(zip(A.cols, A.vals)):
        pos[i, : c.size] = c
        val[i, : c.size] = v
    if len(_TABLE_CACHE) > 64:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[key] = (A, pos, val)
    return pos, val


def position_oracle(A: SparseHermitian, counter: QueryCounter, i: int, k: int):
    return OracleAccess(A, counter).position_oracle(i, k)


def entry_oracle(A: SparseHermitian, counter: QueryCounter, i: int, j: int):
    return OracleAccess(A, counter).entry_oracle(i, j)


def column_l1(A: SparseHermitian, i: int) -> float:
    """l1 norm of column i (equal to that of row i, up to conjugation)."""
    return float(np.sum(np.abs(A.vals[i - 1])))


def norm1(A: SparseHermitian) -> float:
    """max column l1 norm."""
    return max((column_l1(A, i) for i in range(1, A.n + 1)), default=0.0)


def max_abs(A: SparseHermitian) -> float:
    return max((float(np.max(np.abs(v))) for v in A.vals if v.size), default=0.0)


def embed_tridiag(T: TridiagMatrix) -> SparseHermitian:
    """Sparse form of a tridiagonal matrix (2-sparse when the diagonal is zero)."""
    entries = [(i + 1, i + 1, a) for i, a in enumerate(T.diag) if a != 0]
    entries += [(i + 1, i + 2, b) for i, b in enumerate(T.offdiag) if b != 0]
    s = 2 if T.has_zero_diagonal else 3
    return SparseHermitian.from_entries(T.n, entries, sparsity=min(s, max(T.n, 1)))


def random_sparse_hermitian(n: int, s: int, rng, real: bool = True,
                            target_norm1: float | None = None) -> SparseHermitian:
    """Random Hermitian matrix with at most s nonzeros per row, zero diagonal.

    Built as a union of s random perfect-ish matchings so every row gets at
    most s entries.
    """
    rng = np.random.default_rng(rng)
    M = np.zeros((n, n), dtype=float if real else complex)
    for _ in range(s):
        perm = rng.permutation(n)
        for a, b in zip(perm[0::2], perm[1::2]):
            if M[a, b] != 0:
                continue
            v = rng.uniform(-1, 1)
            if not real:
                v = v + 1j * rng.uniform(-1, 1)
            M[a, b] = v
            M[b, a] = np.conj(v)
    if target_norm1 is not None:
        scale = np.max(np.sum(np.abs(M), axis=0))
        if scale > 0:
            M *= target_norm1 / scale
    return SparseHermitian.from_dense(M, sparsity=s)
