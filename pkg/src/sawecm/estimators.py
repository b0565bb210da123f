"""scikit-learn style estimators around the cubature solvers.

``fit`` takes the sample data and stores the learned rule in attributes with
a trailing underscore; ``integrate`` applies the rule to new samples.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .ecm import ecm_select
from .linalg import as_weights, truncated_svd
from .lp import lp_rule
from .saw import Ordering, SubspaceFamily, global_ecm, independent_rule, saw_ecm

__all__ = ["EmpiricalCubature", "SubspaceAdaptiveCubature", "LinearProgramCubature"]


class EmpiricalCubature(BaseEstimator):
    """Greedy positive-weight rule for the span of one sample matrix.

    Parameters
    ----------
    svd_tolerance : float
        Relative Frobenius truncation of the sample basis.
    failure_threshold : int
        Consecutive non-growing iterations before the pool is enlarged.
    low_norm_floor : float
        Rows with norm below this fraction of the largest are never offered.

    Attributes
    ----------
    indices_ : ndarray of int
        Selected point indices (0-based, increasing).
    weights_ : ndarray
        Positive weights of the selected points.
    basis_ : ndarray
        Orthonormal basis the rule integrates exactly.
    result_ : EcmResult
    """

    def __init__(self, svd_tolerance=0.0, failure_threshold=10, low_norm_floor=1e-6):
        self.svd_tolerance = svd_tolerance
        self.failure_threshold = failure_threshold
        self.low_norm_floor = low_norm_floor

    def fit(self, X, sample_weight, initial_candidates=None):
        """Fit on ``X`` (M points x n samples) with full-order weights ``sample_weight``."""
        X = check_array(X)
        W = as_weights(sample_weight, X.shape[0])
        self.basis_ = np.array(truncated_svd(X, self.svd_tolerance).left)
        self.result_ = ecm_select(
            self.basis_,
            W,
            initial_candidates,
            failure_threshold=self.failure_threshold,
            low_norm_floor=self.low_norm_floor,
        )
        self.indices_ = self.result_.indices
        self.weights_ = self.result_.weights
        self.n_points_in_ = X.shape[0]
        return self

    def integrate(self, X):
        """Reduced integrals ``X[indices_].T @ weights_`` of the columns of ``X``."""
        check_is_fitted(self, "indices_")
        X = check_array(X)
        if X.shape[0] != self.n_points_in_:
            raise ValueError(f"expected {self.n_points_in_} rows, got {X.shape[0]}")
        return X[self.indices_].T @ self.weights_


_STRATEGIES = {
    "saw-ecm": saw_ecm,
    "global-ecm": global_ecm,
    "independent-ecm": independent_rule,
}


class _FamilyEstimator(BaseEstimator):
    def _family(self, sample_matrices, sample_weight, ordering=None):
        mats = [check_array(a) for a in sample_matrices]
        return SubspaceFamily(
            mats,
            sample_weight,
            svd_tolerance=self.svd_tolerance,
            ordering=ordering or Ordering(),
            augment=self.augment,
            weighted=self.weighted,
        )

    def _store(self, rule, family):
        self.rule_ = rule
        self.indices_ = rule.indices
        self.weights_ = rule.weights
        self.mode_counts_ = rule.mode_counts
        self.n_points_in_ = family.n_points
        self.n_subspaces_ = family.n_subspaces

    def integrate(self, X, subspace):
        """Integrals of the columns of ``X`` with the weights of ``subspace``."""
        check_is_fitted(self, "indices_")
        X = check_array(X)
        if X.shape[0] != self.n_points_in_:
            raise ValueError(f"expected {self.n_points_in_} rows, got {X.shape[0]}")
        return X[self.indices_].T @ self.weights_[subspace]


class SubspaceAdaptiveCubature(_FamilyEstimator):
    """One shared set of points with one weight vector per subspace.

    Parameters
    ----------
    strategy : {"saw-ecm", "global-ecm", "independent-ecm"}
    svd_tolerance : float
    augment : {"auto", "always", "never"}
        Constant-function augmentation policy of each basis.
    weighted : bool
        Build the bases from ``diag(sqrt(W)) A`` instead of ``A``.
    ordering : {"natural", "random"} or sequence of int
        Visit order of the subspaces (0-based permutation when explicit).
    random_state : int
        Seed of the random ordering.

    Attributes
    ----------
    indices_ : ndarray of int
    weights_ : ndarray, shape (k, n_selected)
    mode_counts_ : tuple of int
    rule_ : AdaptiveRule
    """

    def __init__(
        self,
        strategy="saw-ecm",
        svd_tolerance=0.0,
        augment="auto",
        weighted=False,
        ordering="natural",
        random_state=0,
        failure_threshold=10,
        low_norm_floor=1e-6,
    ):
        self.strategy = strategy
        self.svd_tolerance = svd_tolerance
        self.augment = augment
        self.weighted = weighted
        self.ordering = ordering
        self.random_state = random_state
        self.failure_threshold = failure_threshold
        self.low_norm_floor = low_norm_floor

    def _ordering(self):
        if isinstance(self.ordering, str):
            if self.ordering == "random":
                return Ordering.random(self.random_state)
            return Ordering(self.ordering)
        return Ordering.explicit(self.ordering)

    def fit(self, sample_matrices, sample_weight):
        """Fit on a list of sample matrices sharing the same M points."""
        if self.strategy not in _STRATEGIES:
            raise ValueError(f"strategy must be one of {sorted(_STRATEGIES)}")
        family = self._family(sample_matrices, sample_weight, self._ordering())
        rule = _STRATEGIES[self.strategy](
            family, self.failure_threshold, self.low_norm_floor
        )
        self._store(rule, family)
        return self


class LinearProgramCubature(_FamilyEstimator):
    """Shared-point rule from the weight-sum minimizing linear program.

    Attributes
    ----------
    indices_, weights_, mode_counts_, rule_
        As in :class:`SubspaceAdaptiveCubature`.
    solution_ : LpSolution
    """

    def __init__(
        self,
        pivot_rule="bland",
        svd_tolerance=0.0,
        augment="auto",
        weighted=False,
        zero_floor=1e-10,
    ):
        self.pivot_rule = pivot_rule
        self.svd_tolerance = svd_tolerance
        self.augment = augment
        self.weighted = weighted
        self.zero_floor = zero_floor

    def fit(self, sample_matrices, sample_weight):
        family = self._family(sample_matrices, sample_weight)
        rule, self.solution_ = lp_rule(family, self.pivot_rule, self.zero_floor)
        self._store(rule, family)
        return self
