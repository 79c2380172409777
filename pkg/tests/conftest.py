import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240417)


class SealedOracle:
    """Oracle object that answers only through the two scalar oracles.

    The matrix is captured in closures; the batched methods the estimators
    call are rebuilt from one scalar call per answer, and every scalar call
    is logged.  An estimator that reaches the matrix any other way has no
    handle to do so.
    """

    __slots__ = ("n", "sparsity", "is_real", "counter", "_pos", "_ent", "log")

    def __init__(self, A):
        from matdeg.sparsemat import OracleAccess, QueryCounter
        inner = OracleAccess(A, QueryCounter())
        self.n, self.sparsity, self.is_real = A.n, A.sparsity, A.is_real
        self.counter = QueryCounter()
        self.log = []

        def pos(i, k):
            self.log.append(("o1", i, k))
            self.counter.add(o1=1)
            return inner.position_oracle(i, k)

        def ent(i, j):
            self.log.append(("o2", i, j))
            self.counter.add(o2=1)
            return inner.entry_oracle(i, j)

        self._pos, self._ent = pos, ent

    def _dtype(self):
        return float if self.is_real else complex

    def entries_batch(self, rows, cols):
        rows, cols = np.broadcast_arrays(np.asarray(rows, int), np.asarray(cols, int))
        out = np.zeros(rows.shape, dtype=self._dtype())
        for idx in np.ndindex(rows.shape):
            if rows[idx] > 0 and cols[idx] > 0:
                out[idx] = self._ent(int(rows[idx]), int(cols[idx]))
        return out

    def neighbours_batch(self, nodes):
        nodes = np.asarray(nodes, int)
        pos = np.zeros((nodes.size, self.sparsity), dtype=int)
        vals = np.zeros((nodes.size, self.sparsity), dtype=self._dtype())
        for a, k in enumerate(nodes):
            for t in range(1, self.sparsity + 1):
                c = self._pos(int(k), t)
                if c is not None:
                    pos[a, t - 1] = c
                    vals[a, t - 1] = self._ent(c, int(k))
        return pos, vals


@pytest.fixture
def sealed():
    return SealedOracle


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
