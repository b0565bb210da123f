import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sawecm.exceptions import AlreadyContained, NonpositiveWeight, SingularGram, ZeroMatrix, ZeroRow
from sawecm.linalg import (
    augment_with_constant,
    ls_add_row,
    ls_direct,
    ls_init,
    ls_remove_rows,
    numerical_rank,
    truncated_svd,
    unweight_basis,
    weighted_svd,
)
from sawecm.problems import gauss_legendre


def monomials(n=20, degree=5):
    g = gauss_legendre(n, (0.0, 1.0))
    return np.vander(g.points, degree + 1, increasing=True), g


def gram_rank(a, tol=1e-12):
    """Rank by Gaussian elimination of the Gram matrix with full pivoting."""
    g = a.T @ a
    g = g / np.abs(g).max()
    rank = 0
    g = g.copy()
    while g.size:
        i, j = np.unravel_index(np.argmax(np.abs(g)), g.shape)
        if abs(g[i, j]) <= tol:
            break
        g = g - np.outer(g[:, j], g[i]) / g[i, j]
        g = np.delete(np.delete(g, i, 0), j, 1)
        rank += 1
    return rank


class TestTruncatedSvd:
    def test_identity(self):
        svd = truncated_svd(np.eye(3))
        np.testing.assert_allclose(svd.singular_values, 1.0)
        np.testing.assert_allclose(np.abs(svd.left), np.abs(svd.left).round())
        assert sorted(np.abs(svd.left).argmax(axis=0)) == [0, 1, 2]

    def test_rank_one(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=7)
        v = rng.normal(size=4)
        svd = truncated_svd(np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v)))
        assert svd.rank == 1
        assert svd.singular_values[0] == pytest.approx(1.0)

    def test_monomial_rank_matches_gram_oracle(self):
        a, _ = monomials()
        assert truncated_svd(a).rank == 6
        assert gram_rank(a) == 6

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            truncated_svd(np.zeros((4, 2)))

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            truncated_svd(np.eye(2), 1.5)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            truncated_svd(np.array([[1.0, np.nan]]))

    @pytest.mark.parametrize("tol", [0.0, 1e-3, 1e-1, 0.5])
    def test_frobenius_bound_and_minimality(self, tol):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(30, 12)) @ np.diag(np.logspace(0, -8, 12)) @ rng.normal(size=(12, 12))
        svd = truncated_svd(a, tol)
        err = np.linalg.norm(a - svd.reconstruct())
        assert err <= max(tol, 1e-12) * np.linalg.norm(a)
        s = np.linalg.svd(a, compute_uv=False)
        if tol > 0 and svd.rank > 1:
            # one mode fewer violates the bound
            tail = np.sqrt(np.sum(s[svd.rank - 1 :] ** 2))
            assert tail > tol * np.linalg.norm(a)

    def test_outputs_are_read_only(self):
        svd = truncated_svd(np.eye(2))
        with pytest.raises(ValueError):
            svd.left[0, 0] = 3.0

    def test_rows_reconstructed_to_relative_accuracy(self):
        a, _ = monomials()
        svd = truncated_svd(a)
        err = np.linalg.norm(a - svd.reconstruct(), axis=1)
        assert np.all(err <= 1e-12 * np.linalg.norm(a, axis=1))

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (8, 5), elements=st.floats(-10, 10)))
    def test_orthonormal_and_decreasing(self, a):
        if not np.any(a):
            return
        svd = truncated_svd(a)
        m = svd.rank
        np.testing.assert_allclose(svd.left.T @ svd.left, np.eye(m), atol=1e-12)
        assert np.all(svd.singular_values > 0)
        assert np.all(np.diff(svd.singular_values) <= 0)
        assert np.linalg.norm(a - svd.reconstruct()) <= 1e-12 * np.linalg.norm(a) * 10


class TestWeightedSvd:
    def test_unit_weights_match_plain(self):
        a, _ = monomials()
        p = truncated_svd(a)
        w = weighted_svd(a, np.ones(20))
        np.testing.assert_allclose(w.left, p.left)
        np.testing.assert_allclose(w.singular_values, p.singular_values)

    def test_constant_column(self):
        w = np.random.default_rng(0).uniform(0.1, 2.0, 9)
        svd = weighted_svd(np.ones((9, 1)), w)
        ubar = svd.left
        assert (ubar.T @ ubar).item() == pytest.approx(1.0)
        ut = unweight_basis(ubar, w)
        assert (ut.T @ (w[:, None] * ut)).item() == pytest.approx(1.0)

    def test_l2_orthogonality(self):
        a, g = monomials()
        svd = weighted_svd(a, g.weights)
        np.testing.assert_allclose(svd.left.T @ svd.left, np.eye(6), atol=1e-10)
        ut = unweight_basis(svd.left, g.weights)
        np.testing.assert_allclose(ut.T @ (g.weights[:, None] * ut), np.eye(6), atol=1e-10)

    def test_nonpositive_weight(self):
        with pytest.raises(NonpositiveWeight):
            weighted_svd(np.eye(2), [1.0, 0.0])


class TestAugment:
    def test_empty_basis(self):
        out = augment_with_constant(np.zeros((5, 0)))
        np.testing.assert_allclose(out[:, 0], 1 / np.sqrt(5))

    def test_constant_already_contained(self):
        with pytest.raises(AlreadyContained):
            augment_with_constant(np.full((6, 1), 1 / np.sqrt(6)))

    def test_alternating_column(self):
        u = np.array([1, -1, 1, -1, 1, -1], dtype=float)[:, None] / np.sqrt(6)
        W = np.ones(6)
        assert np.linalg.norm(u.T @ W) < 1e-14
        aug = augment_with_constant(u, W)
        np.testing.assert_allclose(aug.T @ aug, np.eye(2), atol=1e-14)
        # omega = 0 no longer solves aug.T @ omega = aug.T @ W
        assert np.linalg.norm(aug.T @ W) > 1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_orthonormal_and_spans_constants(self, seed):
        rng = np.random.default_rng(seed)
        u, _ = np.linalg.qr(rng.normal(size=(40, 6)))
        aug = augment_with_constant(u)
        np.testing.assert_allclose(aug.T @ aug, np.eye(7), atol=1e-10)
        c = np.ones(40)
        assert np.linalg.norm(c - aug @ (aug.T @ c)) < 1e-10


class TestLeastSquares:
    def test_init_examples(self):
        assert ls_init([1, 0], [2, 0]).weights[0] == pytest.approx(2.0)
        assert ls_init([1, 1], [1, 1]).weights[0] == pytest.approx(1.0)
        st_ = ls_init([3, 4], [1, 0])
        assert st_.weights[0] == pytest.approx(3 / 25)
        assert st_.inverse_gram[0, 0] == pytest.approx(1 / 25)

    def test_zero_row(self):
        with pytest.raises(ZeroRow):
            ls_init([0.0, 0.0], [1.0, 1.0])

    def test_dependent_row(self):
        s = ls_init([1.0, 2.0, 0.0], np.ones(3), 0)
        with pytest.raises(SingularGram):
            ls_add_row(s, [2.0, 4.0, 0.0], np.ones(3), 1)

    def test_remove_unknown_row(self):
        s = ls_init([1.0, 0.0], [1.0, 1.0], 3)
        with pytest.raises(ValueError):
            ls_remove_rows(s, [5])

    @pytest.mark.parametrize("seed", range(100))
    def test_incremental_matches_direct(self, seed):
        rng = np.random.default_rng(seed)
        U = rng.normal(size=(50, 8))
        b = rng.normal(size=8)
        order = rng.permutation(50)[:8]
        s = ls_init(U[order[0]], b, int(order[0]))
        for g in order[1:]:
            s = ls_add_row(s, U[g], b, int(g))
            rows = U[list(s.selected_rows)]
            ref = ls_direct(rows, b)
            assert np.linalg.norm(s.weights - ref) <= 1e-10 * max(1.0, np.linalg.norm(ref))
            gram = rows @ rows.T
            # a floating-point inverse is only good to a multiple of cond * eps
            tol = max(1e-10, 1e3 * np.linalg.cond(gram) * np.finfo(float).eps)
            np.testing.assert_allclose(s.inverse_gram @ gram, np.eye(len(s)), atol=tol)
        drop = [int(g) for g in rng.choice(order, size=3, replace=False)]
        s = ls_remove_rows(s, drop, b)
        ref = ls_direct(U[list(s.selected_rows)], b)
        assert np.linalg.norm(s.weights - ref) <= 1e-10 * max(1.0, np.linalg.norm(ref))
        assert not set(drop).intersection(s.selected_rows)


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.outer(np.ones(4), [1.0, 2.0])) == 1
