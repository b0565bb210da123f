"""Shared-point cubature over several subspaces (subspace-adaptive weights).

The integrand of subspace ``i`` is sampled in ``A[i]`` (M x n_i P_i). Each
sample matrix is compressed into an orthonormal basis; the greedy selection
then visits the bases one at a time, offering the points collected so far as
the initial candidates of the next pass. The result is one set of points
shared by every subspace and one nonnegative weight vector per subspace.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .ecm import ecm_select
from .exceptions import AlreadyContained, NoConvergence
from .linalg import (
    as_matrix,
    as_weights,
    augment_with_constant,
    numerical_rank,
    truncated_svd,
    weighted_svd,
)

__all__ = [
    "Ordering",
    "SubspaceFamily",
    "AdaptiveRule",
    "saw_ecm",
    "global_ecm",
    "global_dimension",
    "independent_baseline",
    "independent_rule",
    "assemble_weights",
    "subspace_basis",
]

AUGMENT_POLICIES = ("always", "auto", "never")
# "auto" augments when ||U.T W|| falls below this fraction of ||W||
ILL_POSED_RTOL = 1e-8


@dataclass(frozen=True)
class Ordering:
    """Visit order of the subspaces.

    ``kind`` is ``"natural"``, ``"random"`` (seeded by ``seed``) or
    ``"explicit"`` (``permutation`` given, 0-based).
    """

    kind: str = "natural"
    seed: int = 0
    permutation: tuple = ()

    def __post_init__(self):
        if self.kind not in ("natural", "random", "explicit"):
            raise ValueError(f"unknown ordering {self.kind!r}")

    @classmethod
    def random(cls, seed):
        return cls("random", seed=int(seed))

    @classmethod
    def explicit(cls, permutation):
        return cls("explicit", permutation=tuple(int(p) for p in permutation))

    def visit_order(self, k):
        if self.kind == "natural":
            return list(range(k))
        if self.kind == "random":
            return [int(p) for p in np.random.default_rng(self.seed).permutation(k)]
        perm = list(self.permutation)
        if sorted(perm) != list(range(k)):
            raise ValueError(f"explicit ordering is not a permutation of 0..{k - 1}")
        return perm


def subspace_basis(a, w, tolerance=0.0, augment="auto", weighted=False):
    """Orthonormal integrand basis of one sample matrix.

    The basis is the truncated left singular subspace of ``a`` (or of
    ``diag(sqrt(w)) a`` when ``weighted``). ``augment`` controls the extra
    column spanning constant functions: ``"always"`` appends it unless the
    constants are already contained, ``"auto"`` does so only when the integral
    vector ``U.T @ w`` is close to zero, ``"never"`` leaves the basis alone.
    """
    if augment not in AUGMENT_POLICIES:
        raise ValueError(f"augment must be one of {AUGMENT_POLICIES}")
    if weighted:
        u = np.array(weighted_svd(a, w, tolerance).left)
    else:
        u = np.array(truncated_svd(a, tolerance).left)
    needs = augment == "always" or (
        augment == "auto"
        and np.linalg.norm(u.T @ (np.sqrt(w) if weighted else w))
        < ILL_POSED_RTOL * np.linalg.norm(w)
    )
    if needs:
        try:
            u = augment_with_constant(u, w)
        except AlreadyContained:
            pass
    return u


@dataclass
class SubspaceFamily:
    """Sample matrices of ``k`` integrand subspaces on one set of M points.

    Bases are computed lazily (truncated SVD plus the augmentation policy) and
    cached, so repeated runs with different orderings reuse them.
    """

    sample_matrices: list
    full_weights: np.ndarray
    svd_tolerance: float = 0.0
    ordering: Ordering = field(default_factory=Ordering)
    augment: str = "auto"
    weighted: bool = False

    def __post_init__(self):
        self.sample_matrices = [
            as_matrix(a, f"sample_matrices[{i}]")
            for i, a in enumerate(self.sample_matrices)
        ]
        if not self.sample_matrices:
            raise ValueError("a family needs at least one sample matrix")
        rows = {a.shape[0] for a in self.sample_matrices}
        if len(rows) != 1:
            raise ValueError(f"sample matrices disagree on row count: {sorted(rows)}")
        self.full_weights = as_weights(self.full_weights, rows.pop())
        if self.augment not in AUGMENT_POLICIES:
            raise ValueError(f"augment must be one of {AUGMENT_POLICIES}")

    @property
    def n_points(self):
        return self.full_weights.size

    @property
    def n_subspaces(self):
        return len(self.sample_matrices)

    def __len__(self):
        return self.n_subspaces

    @cached_property
    def bases(self):
        """Euclidean-orthonormal bases fed to the point selection."""
        return [
            subspace_basis(
                a, self.full_weights, self.svd_tolerance, self.augment, self.weighted
            )
            for a in self.sample_matrices
        ]

    @property
    def ecm_weights(self):
        """Weights paired with :attr:`bases` (``sqrt(W)`` in the weighted case)."""
        return np.sqrt(self.full_weights) if self.weighted else self.full_weights

    def to_point_weights(self, indices, w):
        """Map selection weights back to weights on the sampled integrands."""
        if not self.weighted:
            return np.asarray(w, dtype=float)
        return np.asarray(w, dtype=float) * np.sqrt(self.full_weights[indices])

    def mode_counts(self):
        return [u.shape[1] for u in self.bases]

    def exact_integrals(self, i):
        return self.sample_matrices[i].T @ self.full_weights

    def with_options(self, **changes):
        """Copy sharing the sample data; the basis cache is kept when the basis
        construction is unaffected by ``changes``."""
        params = dict(
            sample_matrices=self.sample_matrices,
            full_weights=self.full_weights,
            svd_tolerance=self.svd_tolerance,
            ordering=self.ordering,
            augment=self.augment,
            weighted=self.weighted,
        )
        params.update(changes)
        new = SubspaceFamily(**params)
        if "bases" in self.__dict__ and not {
            "sample_matrices",
            "full_weights",
            "svd_tolerance",
            "augment",
            "weighted",
        }.intersection(changes):
            new.__dict__["bases"] = self.bases
        return new


@dataclass(frozen=True)
class AdaptiveRule:
    """Shared points ``indices`` (0-based, increasing) and one weight vector
    per subspace, stacked as the rows of ``weights`` (k x card(E))."""

    indices: np.ndarray
    weights: np.ndarray
    mode_counts: tuple
    visit_order: tuple = ()
    strategy: str = "saw-ecm"

    @property
    def n_points(self):
        return int(self.indices.size)

    @property
    def m_max(self):
        return max(self.mode_counts) if self.mode_counts else 0

    @property
    def n_subspaces(self):
        return self.weights.shape[0]

    def sparsity(self, M):
        """k x M 0/1 occupancy matrix of the per-subspace supports."""
        occ = np.zeros((self.n_subspaces, M), dtype=np.int8)
        rows, cols = np.nonzero(self.weights > 0)
        occ[rows, self.indices[cols]] = 1
        return occ


def assemble_weights(local_indices, local_weights, indices):
    """Scatter ``local_weights`` into a zero vector aligned with ``indices``."""
    pos = {int(g): p for p, g in enumerate(indices)}
    out = np.zeros(len(indices))
    for g, w in zip(local_indices, local_weights):
        out[pos[int(g)]] = w
    return out


def _ecm_kwargs(failure_threshold, low_norm_floor):
    return dict(failure_threshold=failure_threshold, low_norm_floor=low_norm_floor)


def saw_ecm(family, failure_threshold=10, low_norm_floor=1e-6):
    """Subspace-adaptive weights ECM over every basis of ``family``.

    Raises
    ------
    NoConvergence
        Annotated with the (0-based) subspace index whose pass failed.
    """
    bases = family.bases
    order = family.ordering.visit_order(len(bases))
    candidates = []
    seen = set()
    local = {}
    for j in order:
        try:
            res = ecm_select(
                bases[j],
                family.ecm_weights,
                initial_candidates=list(candidates) or None,
                **_ecm_kwargs(failure_threshold, low_norm_floor),
            )
        except NoConvergence as exc:
            raise NoConvergence(str(exc), subspace=j) from exc
        local[j] = res
        for g in res.indices.tolist():
            if g not in seen:
                seen.add(g)
                candidates.append(g)
    indices = np.array(sorted(seen), dtype=int)
    weights = np.vstack(
        [
            assemble_weights(
                local[j].indices,
                family.to_point_weights(local[j].indices, local[j].weights),
                indices,
            )
            for j in range(len(bases))
        ]
    )
    return AdaptiveRule(
        indices=indices,
        weights=weights,
        mode_counts=tuple(u.shape[1] for u in bases),
        visit_order=tuple(order),
        strategy="saw-ecm",
    )


def _concatenated_bases(family):
    return np.hstack(family.bases)


def global_dimension(family):
    """Dimension of the sum of the subspace spans (rank of ``[U1 | ... | Uk]``)."""
    return numerical_rank(_concatenated_bases(family))


def global_ecm(family, failure_threshold=10, low_norm_floor=1e-6):
    """One rule with the same weights for all subspaces.

    The basis is the untruncated SVD basis of the concatenated subspace bases.
    """
    cat = _concatenated_bases(family)
    u = np.array(truncated_svd(cat, 0.0).left)
    if family.augment == "always":
        try:
            u = augment_with_constant(u)
        except AlreadyContained:
            pass
    res = ecm_select(
        u, family.ecm_weights, **_ecm_kwargs(failure_threshold, low_norm_floor)
    )
    w = family.to_point_weights(res.indices, res.weights)
    k = family.n_subspaces
    return AdaptiveRule(
        indices=res.indices.copy(),
        weights=np.tile(w, (k, 1)),
        mode_counts=tuple(family.mode_counts()),
        strategy="global-ecm",
    )


def independent_baseline(family, failure_threshold=10, low_norm_floor=1e-6):
    """One full-pool ECM run per subspace (no sharing of points)."""
    out = []
    for j, u in enumerate(family.bases):
        try:
            out.append(
                ecm_select(
                    u, family.ecm_weights, **_ecm_kwargs(failure_threshold, low_norm_floor)
                )
            )
        except NoConvergence as exc:
            raise NoConvergence(str(exc), subspace=j) from exc
    return out


def independent_rule(family, failure_threshold=10, low_norm_floor=1e-6):
    """Union of the independent per-subspace rules, as an :class:`AdaptiveRule`."""
    runs = independent_baseline(family, failure_threshold, low_norm_floor)
    indices = np.array(sorted({g for r in runs for g in r.indices.tolist()}), dtype=int)
    weights = np.vstack(
        [
            assemble_weights(
                r.indices, family.to_point_weights(r.indices, r.weights), indices
            )
            for r in runs
        ]
    )
    return AdaptiveRule(
        indices=indices,
        weights=weights,
        mode_counts=tuple(family.mode_counts()),
        strategy="independent-ecm",
    )
