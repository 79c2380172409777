import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matdeg.estimators import (BudgetExceeded, PolySpec, circle_bound, contour_estimate,
                               contour_parameters, contour_poly, dense_entry, exact_entry,
                               oracle_norm1, poly_norm_l1_scaled, poly_norm_l2_scaled,
                               walk_count, walk_estimate, walk_sums)
from matdeg.funcspace import cheb_fit, parse_function
from matdeg.sparsemat import (OracleAccess, QueryCounter, SparseHermitian, norm1,
                              random_sparse_hermitian)


def poly_entry(A, p, i, j):
    M = A.dense()
    out, P = 0.0, np.eye(A.n)
    for c in p.coeffs:
        out = out + c * P[i - 1, j - 1]
        P = P @ M
    return out


@pytest.fixture
def small():
    return random_sparse_hermitian(5, 2, 11, target_norm1=0.9)


class TestPolySpec:
    def test_trims(self):
        assert PolySpec([1.0, 2.0, 0.0]).degree == 1

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PolySpec([1.0, np.nan])

    def test_from_cheb(self):
        p = PolySpec.from_cheb(cheb_fit(parse_function("cheb:d=3"), 3))
        np.testing.assert_allclose(p.coeffs, [0, -3, 0, 4], atol=1e-13)

    @given(st.lists(st.floats(-2, 2), min_size=1, max_size=8), st.floats(0, 2))
    def test_norms(self, coeffs, beta):
        p = PolySpec(coeffs)
        l1 = poly_norm_l1_scaled(p, beta)
        l2 = poly_norm_l2_scaled(p, beta)
        assert l2 <= l1 + 1e-12
        assert l1 == pytest.approx(sum(abs(c) * beta**r for r, c in enumerate(p.coeffs)))


class TestExactEntry:
    @given(st.integers(0, 2**32 - 1), st.integers(0, 6), st.booleans())
    def test_matches_dense(self, seed, d, real):
        rng = np.random.default_rng(seed)
        A = random_sparse_hermitian(10, 3, rng, real=real)
        p = PolySpec(rng.normal(size=d + 1))
        i, j = (int(v) for v in rng.integers(1, 11, 2))
        assert exact_entry(A, p, i, j) == pytest.approx(poly_entry(A, p, i, j), abs=1e-10)

    def test_query_count_formula(self):
        # a 4-regular graph: level r has 4^r path ends
        n, s, d = 32, 4, 4
        entries = [(k, (k + off - 1) % n + 1, 0.1) for k in range(1, n + 1) for off in (1, 5)]
        A = SparseHermitian.from_entries(n, [(min(a, b), max(a, b), v) for a, b, v in entries])
        assert all(len(c) == s for c in A.cols)
        c = QueryCounter()
        exact_entry(A, PolySpec(np.ones(d + 1)), 1, 2, counter=c)
        ends = [s**r for r in range(d)]
        assert c.o2 == sum(ends) + sum(s * e for e in ends[:-1])
        assert c.o1 == sum(s * e for e in ends[:-1])

    def test_budget(self):
        A = random_sparse_hermitian(32, 4, 3)
        with pytest.raises(BudgetExceeded):
            exact_entry(A, PolySpec(np.ones(8)), 1, 2, budget=1000)

    def test_index_checked(self, small):
        with pytest.raises(IndexError):
            exact_entry(small, PolySpec([1.0]), 0, 1)

    def test_counter_conflict(self, small):
        with pytest.raises(ValueError):
            exact_entry(OracleAccess(small), PolySpec([1.0, 1.0]), 1, 1, counter=QueryCounter())


class TestWalkCount:
    def test_formula(self):
        p = PolySpec([0.0, 1.0, 1.0])
        assert walk_count(p, 0.5, 0.1, 0.1) == math.ceil(2 * math.log(40) / (0.1 / 0.75) ** 2)

    def test_complex_needs_more(self):
        p = PolySpec([0.0, 1.0, 1.0])
        assert walk_count(p, 0.5, 0.1, 0.1, True) > walk_count(p, 0.5, 0.1, 0.1)

    def test_constant(self):
        assert walk_count(PolySpec([3.0]), 1.0, 0.1, 0.1) == 0

    @pytest.mark.parametrize("eps,delta", [(0.0, 0.1), (0.1, 0.0), (0.1, 1.0)])
    def test_bad_args(self, eps, delta):
        with pytest.raises(ValueError):
            walk_count(PolySpec([0, 1]), 1.0, eps, delta)

    def test_monotone(self):
        p = PolySpec([0.0, 0.5, 0.5])
        assert walk_count(p, 1.0, 0.05, 0.1) > walk_count(p, 1.0, 0.1, 0.1)
        assert walk_count(p, 1.0, 0.1, 0.01) > walk_count(p, 1.0, 0.1, 0.1)


class TestWalkEstimate:
    def test_unbiased(self, small):
        # mean of Y_r over many walks converges to <i|A^r|j>
        d, walks = 4, 400_000
        sums = walk_sums(OracleAccess(small), d, 2, 1, walks, seed=5)
        M = small.dense()
        nrm = norm1(small)
        for r in range(1, d + 1):
            target = np.linalg.matrix_power(M, r)[1, 0]
            sd = nrm**r / math.sqrt(walks)
            assert abs(sums[r - 1] / walks - target) < 5 * sd

    @pytest.mark.parametrize("real", [True, False])
    def test_error_contract(self, real):
        A = random_sparse_hermitian(16, 3, 8, real=real, target_norm1=0.8)
        p = PolySpec([0.1, 0.5, -0.3, 0.2])
        exact = poly_entry(A, p, 3, 5)
        hits = sum(abs(walk_estimate(A, p, 3, 5, 0.05, 0.2, rng_seed=s).value - exact) <= 0.05
                   for s in range(20))
        assert hits >= 16

    def test_reproducible_and_thread_independent(self, small):
        p = PolySpec([0.0, 1.0, 0.5, 0.25])
        a = walk_estimate(small, p, 1, 3, 0.1, 0.1, rng_seed=9, walks=70_000, threads=1)
        b = walk_estimate(small, p, 1, 3, 0.1, 0.1, rng_seed=9, walks=70_000, threads=3)
        assert a.value == pytest.approx(b.value, abs=1e-14)

    def test_seed_changes_value(self, small):
        p = PolySpec([0.0, 1.0, 0.5])
        a = walk_estimate(small, p, 1, 1, 0.1, 0.1, rng_seed=1, walks=5000)
        b = walk_estimate(small, p, 1, 1, 0.1, 0.1, rng_seed=2, walks=5000)
        assert a.value != b.value

    def test_queries_per_walk(self):
        s, d = 4, 6
        A = random_sparse_hermitian(64, s, 2, target_norm1=0.5)
        p = PolySpec(np.ones(d + 1))
        rep = walk_estimate(A, p, 1, 1, 0.5, 0.3, norm1=0.5, walks=5000)
        assert rep.queries.total / rep.walks_used <= 2 * s * d
        assert rep.diagnostics["scan_o1"] == 0

    def test_scan_accounted(self, small):
        rep = walk_estimate(small, PolySpec([0.0, 1.0]), 1, 1, 0.5, 0.5, walks=10)
        assert rep.diagnostics["scan_o1"] == small.n * small.sparsity
        assert rep.diagnostics["norm1"] == pytest.approx(norm1(small))

    def test_oracle_norm1(self, small):
        assert oracle_norm1(OracleAccess(small)) == pytest.approx(norm1(small))

    def test_dead_end(self):
        A = SparseHermitian.from_entries(3, [(1, 2, 0.5)], sparsity=1)
        rep = walk_estimate(A, PolySpec([0.0, 0.0, 1.0]), 3, 3, 0.1, 0.1, norm1=0.5, walks=100)
        assert rep.value == 0.0

    def test_report_dict(self, small):
        d = walk_estimate(small, PolySpec([0.0, 1.0]), 1, 2, 0.2, 0.2, rng_seed=4).to_dict()
        assert d["method"] == "walk" and d["seed"] == 4 and "o1" in d


class TestContour:
    @pytest.mark.parametrize("ratio", [1.1, 1.5, 2.0, 4.0])
    def test_parameters_follow_log_ratio(self, ratio):
        eps, lam = 0.01, 0.25
        M, N = contour_parameters(eps, lam, ratio * lam)
        q = math.log(ratio)
        assert M == math.ceil(math.log(1 / eps) / q)
        assert N >= M - 1

    def test_parameters_shrink_with_ratio(self):
        Ms = [contour_parameters(0.01, 0.25, r * 0.25)[0] for r in (1.1, 1.5, 2.0, 4.0)]
        assert Ms == sorted(Ms, reverse=True)

    @pytest.mark.parametrize("lam,Lam", [(0.5, 0.5), (0.6, 0.5), (0.0, 1.0)])
    def test_bad_radii(self, lam, Lam):
        with pytest.raises(ValueError):
            contour_parameters(0.1, lam, Lam)

    def test_circle_bound(self):
        assert circle_bound(np.exp, 1.0) == pytest.approx(1.1 * math.e, rel=1e-6)

    def test_circle_overflow(self):
        with pytest.raises(OverflowError):
            circle_bound(lambda z: np.exp(z), 1e4)

    def test_contour_poly_is_taylor_for_entire_function(self):
        P = contour_poly(np.exp, 0.5, 40, 6)
        np.testing.assert_allclose(P.coeffs, [1 / math.factorial(r) for r in range(7)],
                                   atol=1e-12)

    @pytest.mark.parametrize("shared", [True, False])
    def test_close_to_dense(self, shared):
        A = random_sparse_hermitian(16, 3, 21, target_norm1=0.5)
        f = lambda z: np.exp(z / 2)
        lam = float(np.max(np.abs(np.linalg.eigvalsh(A.dense()))))
        rep = contour_estimate(A, f, lam, 0.5, 0.1, 0.2, i=2, j=2, rng_seed=1, shared=shared)
        assert abs(rep.value - dense_entry(A, f, 2, 2)) <= 0.1
        assert rep.diagnostics["imag_residue"] < 0.1

    def test_deterministic_part(self):
        # with walks replaced by the exact polynomial, only truncation error remains
        A = random_sparse_hermitian(12, 3, 4, target_norm1=0.5)
        f = lambda z: np.exp(z / 2)
        lam = float(np.max(np.abs(np.linalg.eigvalsh(A.dense()))))
        M, N = contour_parameters(0.005, lam, 0.5)
        P = contour_poly(f, 0.5, M, N)
        approx = poly_entry(A, P, 1, 1).real
        assert abs(approx - dense_entry(A, f, 1, 1)) <= 0.005


class TestDenseEntry:
    def test_function_label_evaluator(self):
        A = random_sparse_hermitian(6, 2, 1, target_norm1=0.7)
        f = parse_function("sin:t=2")
        M = A.dense()
        w, V = np.linalg.eigh(M)
        expected = (V * np.sin(2 * w)) @ V.T
        assert dense_entry(A, f, 2, 4) == pytest.approx(expected[1, 3], abs=1e-13)
