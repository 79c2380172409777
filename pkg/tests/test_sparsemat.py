import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matdeg.estimators import PolySpec, exact_entry, walk_estimate
from matdeg.sparsemat import (OracleAccess, OracleRangeError, QueryCounter, SparseHermitian,
                              column_l1, embed_tridiag, entry_oracle, max_abs, norm1,
                              position_oracle, random_sparse_hermitian)
from matdeg.tridiag import path_matrix


@st.composite
def sparse_matrices(draw, real=None):
    n = draw(st.integers(2, 24))
    s = draw(st.integers(1, 5))
    is_real = draw(st.booleans()) if real is None else real
    seed = draw(st.integers(0, 2**32 - 1))
    return random_sparse_hermitian(n, s, seed, real=is_real)


class TestSparseHermitian:
    def test_from_entries_mirrors(self):
        A = SparseHermitian.from_entries(3, [(1, 2, 0.5), (2, 3, 1j)])
        np.testing.assert_array_equal(A.dense(), [[0, 0.5, 0], [0.5, 0, 1j], [0, -1j, 0]])
        assert not A.is_real and A.sparsity == 2

    def test_conflict(self):
        with pytest.raises(ValueError, match="conflicting"):
            SparseHermitian.from_entries(2, [(1, 2, 1.0), (2, 1, 2.0)])

    def test_complex_diagonal(self):
        with pytest.raises(ValueError):
            SparseHermitian.from_entries(2, [(1, 1, 1j)])

    def test_not_hermitian(self):
        with pytest.raises(ValueError):
            SparseHermitian.from_dense([[0, 1], [2, 0]])

    def test_sparsity_enforced(self):
        with pytest.raises(ValueError):
            SparseHermitian.from_dense(np.ones((3, 3)), sparsity=2)

    def test_embed_tridiag(self):
        A = embed_tridiag(path_matrix(6, 0.5))
        assert A.sparsity == 2 and A.nnz == 10
        np.testing.assert_array_equal(A.dense(), path_matrix(6, 0.5).dense())

    @given(sparse_matrices())
    def test_dict_round_trip(self, A):
        B = SparseHermitian.from_dict(A.to_dict())
        np.testing.assert_array_equal(A.dense(), B.dense())
        assert B.sparsity == A.sparsity

    def test_file_round_trip(self, tmp_path):
        A = random_sparse_hermitian(10, 3, 1, real=False)
        A.save(tmp_path / "a.json")
        np.testing.assert_array_equal(SparseHermitian.load(tmp_path / "a.json").dense(),
                                      A.dense())

    @given(sparse_matrices())
    def test_norms(self, A):
        M = A.dense()
        assert norm1(A) == pytest.approx(np.max(np.sum(np.abs(M), axis=0)))
        assert column_l1(A, 1) == pytest.approx(np.sum(np.abs(M[:, 0])))
        assert max_abs(A) == pytest.approx(np.max(np.abs(M)))


class TestRandomSparse:
    @pytest.mark.parametrize("real", [True, False])
    def test_structure(self, rng, real):
        A = random_sparse_hermitian(64, 4, rng, real=real, target_norm1=0.5)
        M = A.dense()
        assert np.max(np.count_nonzero(M, axis=1)) <= 4
        assert np.all(np.diag(M) == 0)
        np.testing.assert_allclose(M, M.conj().T)
        assert norm1(A) == pytest.approx(0.5)

    def test_reproducible(self):
        a = random_sparse_hermitian(20, 3, 7).dense()
        b = random_sparse_hermitian(20, 3, 7).dense()
        np.testing.assert_array_equal(a, b)


class TestOracles:
    def setup_method(self):
        self.A = SparseHermitian.from_entries(4, [(1, 2, 0.3), (1, 4, -0.2), (2, 3, 0.7)],
                                              sparsity=3)

    def test_position(self):
        c = QueryCounter()
        assert position_oracle(self.A, c, 1, 1) == 2
        assert position_oracle(self.A, c, 1, 2) == 4
        assert position_oracle(self.A, c, 1, 3) is None
        assert c.o1 == 3 and c.o2 == 0

    def test_position_range(self):
        with pytest.raises(OracleRangeError):
            position_oracle(self.A, QueryCounter(), 1, 4)
        with pytest.raises(OracleRangeError):
            position_oracle(self.A, QueryCounter(), 5, 1)

    def test_entry(self):
        c = QueryCounter()
        assert entry_oracle(self.A, c, 4, 1) == -0.2
        assert entry_oracle(self.A, c, 3, 4) == 0.0
        assert c.o2 == 2

    def test_row_positions(self):
        o = OracleAccess(self.A)
        np.testing.assert_array_equal(o.row_positions(2), [1, 3, 0])
        assert o.counter.o1 == 3

    def test_batches_charge_like_scalars(self):
        o = OracleAccess(self.A)
        np.testing.assert_array_equal(o.positions_batch(np.array([1, 3])), [[2, 4, 0], [2, 0, 0]])
        assert o.counter.o1 == 6
        out = o.entries_batch(np.array([1, 0, 2]), np.array([2, 3, 3]))
        np.testing.assert_allclose(out, [0.3, 0.0, 0.7])
        assert o.counter.o2 == 2

    def test_neighbours(self):
        o = OracleAccess(self.A)
        pos, vals = o.neighbours_batch(np.array([1, 4]))
        np.testing.assert_array_equal(pos, [[2, 4, 0], [1, 0, 0]])
        np.testing.assert_allclose(vals, [[0.3, -0.2, 0], [-0.2, 0, 0]])
        assert (o.counter.o1, o.counter.o2) == (6, 3)

    def test_counter_arithmetic(self):
        c = QueryCounter(2, 3) + QueryCounter(1, 1)
        assert (c.o1, c.o2, c.total) == (3, 4, 7)
        with pytest.raises(ValueError):
            c.add(o1=-1)

    def test_no_matrix_attribute(self):
        o = OracleAccess(self.A)
        with pytest.raises(AttributeError):
            o.dense  # noqa: B018


class TestSealedAccess:
    @given(sparse_matrices(), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_exact_entry_uses_only_oracles(self, A, d, seed):
        from conftest import SealedOracle
        rng = np.random.default_rng(seed)
        p = PolySpec(rng.normal(size=d + 1))
        i, j = (int(v) for v in rng.integers(1, A.n + 1, 2))
        box = SealedOracle(A)
        value = exact_entry(box, p, i, j)
        M = A.dense()
        expected = sum(c * np.linalg.matrix_power(M, r)[i - 1, j - 1]
                       for r, c in enumerate(p.coeffs))
        assert value == pytest.approx(expected, abs=1e-10)
        direct = QueryCounter()
        exact_entry(A, p, i, j, counter=direct)
        assert (box.counter.o1, box.counter.o2) == (direct.o1, direct.o2)
        assert len(box.log) == direct.total

    def test_walks_use_only_oracles(self, sealed):
        A = random_sparse_hermitian(12, 3, 5, target_norm1=0.8)
        p = PolySpec([0.0, 1.0, 0.5, 0.25])
        box = sealed(A)
        rep = walk_estimate(box, p, 1, 2, 0.5, 0.3, rng_seed=3, norm1=0.8, walks=300)
        direct = walk_estimate(A, p, 1, 2, 0.5, 0.3, rng_seed=3, norm1=0.8, walks=300)
        assert rep.value == direct.value
        assert (rep.queries.o1, rep.queries.o2) == (direct.queries.o1, direct.queries.o2)
        assert len(box.log) == rep.queries.total
