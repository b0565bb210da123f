"""Dense linear algebra used by the cubature solvers.

Truncated and weighted SVDs, constant-function augmentation of a basis, and
the incremental least-squares state driven by the greedy point selection.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .exceptions import (
    AlreadyContained,
    NonpositiveWeight,
    SingularGram,
    ZeroMatrix,
    ZeroRow,
)

__all__ = [
    "TruncatedSvd",
    "LsState",
    "truncated_svd",
    "weighted_svd",
    "augment_with_constant",
    "numerical_rank",
    "ls_init",
    "ls_add_row",
    "ls_remove_rows",
    "ls_direct",
]

# Schur complement / pivot ratio below which a Gram update is declared singular.
GRAM_RCOND = 1e-12
CONSTANT_IN_SPAN_TOL = 1e-10


def as_matrix(a, name="a"):
    """Return ``a`` as a finite 2-D float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def as_weights(w, size=None):
    w = np.asarray(w, dtype=float).ravel()
    if size is not None and w.size != size:
        raise ValueError(f"expected {size} weights, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain NaN or Inf entries")
    if np.any(w <= 0):
        raise NonpositiveWeight("full-order weights must be strictly positive")
    return w


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TruncatedSvd:
    """Left singular vectors, singular values and right singular vectors of a
    truncated SVD, plus the relative Frobenius tolerance that produced them."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    tolerance_used: float

    @property
    def rank(self):
        return self.singular_values.size

    def reconstruct(self):
        return (self.left * self.singular_values) @ self.right.T


def noise_floor(s, shape):
    """Smallest singular value treated as signal rather than round-off.

    The cut is ``sqrt(max(shape)) * eps * s[0]``.
    """
    if s.size == 0:
        return 0.0
    return np.sqrt(max(shape)) * np.finfo(float).eps * s[0]


def _rank_for_tolerance(s, tolerance, shape):
    above = int(np.count_nonzero(s > noise_floor(s, shape)))
    if tolerance <= 0:
        return above
    # tail[j] = sqrt(sum_{i >= j} s_i^2); keep the smallest m with tail[m] <= tol * ||s||
    energy = s**2
    tail = np.sqrt(np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]]))
    target = tolerance * np.sqrt(energy.sum())
    m = int(np.argmax(tail <= target))
    return max(1, min(m, above))


def _row_accurate_left(a, u, s, vt):
    """Left vectors recomputed as ``a @ V / s`` and re-orthonormalized by a
    Cholesky QR step.

    LAPACK returns the left vectors with absolute accuracy ~eps, so rows of
    tiny norm lose all relative accuracy, and a rule placed on such a row
    then integrates ``a`` poorly. Both steps here act row by row and keep
    relative accuracy. The plain left vectors are kept whenever the
    recomputed ones are not orthonormal to 1e-8 (badly separated spectra).
    """
    v = (a @ vt.T) / s
    gram = v.T @ v
    if not np.allclose(gram, np.eye(s.size), rtol=0.0, atol=1e-8):
        return u
    try:
        r = la.cholesky(gram)
    except la.LinAlgError:
        return u
    v = la.solve_triangular(r, v.T, trans="T").T
    # keep the sign convention of the LAPACK vectors
    signs = np.sign(np.sum(v * u, axis=0))
    signs[signs == 0] = 1.0
    return v * signs


def truncated_svd(a, tolerance=0.0):
    """Truncated SVD of ``a`` with relative Frobenius truncation ``tolerance``.

    The rank is the smallest ``m`` such that
    ``sqrt(sum_{j>m} s_j**2) <= tolerance * ||a||_F``. With ``tolerance=0`` every
    singular value above the round-off floor (see :func:`noise_floor`) is kept.

    Raises
    ------
    ZeroMatrix
        If ``a`` is identically zero.
    """
    a = as_matrix(a)
    if not 0.0 <= tolerance <= 1.0:
        raise ValueError(f"tolerance must lie in [0, 1], got {tolerance}")
    if not np.any(a):
        raise ZeroMatrix("cannot take the SVD basis of a zero matrix")
    u, s, vt = la.svd(a, full_matrices=False, lapack_driver="gesdd")
    m = _rank_for_tolerance(s, tolerance, a.shape)
    return TruncatedSvd(
        left=_frozen(_row_accurate_left(a, u[:, :m], s[:m], vt[:m])),
        singular_values=_frozen(s[:m]),
        right=_frozen(vt[:m].T),
        tolerance_used=float(tolerance),
    )


def numerical_rank(a):
    """Rank of ``a`` under the same round-off floor used by :func:`truncated_svd`."""
    a = as_matrix(a)
    if not np.any(a):
        return 0
    s = la.svd(a, compute_uv=False)
    return int(np.count_nonzero(s > noise_floor(s, a.shape)))


def weighted_svd(a, w, tolerance=0.0):
    """Truncated SVD of ``diag(sqrt(w)) @ a``.

    The left vectors ``Ubar`` are Euclidean-orthonormal; the matrix
    ``Ubar / sqrt(w)[:, None]`` is orthonormal in the ``diag(w)`` inner product,
    i.e. it samples L2-orthonormal functions at the quadrature points.
    """
    a = as_matrix(a)
    w = as_weights(w, a.shape[0])
    return truncated_svd(np.sqrt(w)[:, None] * a, tolerance)


def unweight_basis(left, w):
    """Map the left vectors of :func:`weighted_svd` back to point values."""
    return np.asarray(left) / np.sqrt(np.asarray(w, dtype=float))[:, None]


def augment_with_constant(u, w=None):
    """Append the normalized projection of the all-ones vector to ``u``.

    ``w`` is accepted for signature symmetry with the weighted pipeline; the
    projection itself is Euclidean.

    Raises
    ------
    AlreadyContained
        If the constant vector already lies in ``span(u)``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    c = np.ones(u.shape[0])
    lam = c - u @ (u.T @ c)
    # second Gram-Schmidt pass keeps orthogonality at round-off level
    lam -= u @ (u.T @ lam)
    norm = np.linalg.norm(lam)
    if norm < CONSTANT_IN_SPAN_TOL * np.linalg.norm(c):
        raise AlreadyContained("constant vector already in the span of the basis")
    return np.column_stack([u, lam / norm])


@dataclass(frozen=True)
class LsState:
    """Unconstrained least-squares fit of ``rows.T @ weights ~= b``.

    ``inverse_gram`` is ``inv(rows @ rows.T)`` and ``projected`` caches
    ``rows @ b``; both are maintained by rank-one updates. ``weights`` get one
    step of refinement against ``target`` (corrected seminormal equations),
    which brings their error from ``cond**2 * eps`` down to about
    ``cond * eps``.
    """

    selected_rows: tuple
    rows: np.ndarray
    inverse_gram: np.ndarray
    projected: np.ndarray
    weights: np.ndarray = field(repr=False)
    target: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.selected_rows)

    def residual(self, b):
        return np.asarray(b) - self.rows.T @ self.weights


def _refined(rows, inv, c, b):
    w = inv @ c
    return w + inv @ (rows @ (b - rows.T @ w))


def ls_init(u_row, b, index=0):
    """Start a least-squares state from a single row."""
    u_row = np.asarray(u_row, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    nrm2 = float(u_row @ u_row)
    if nrm2 == 0.0:
        raise ZeroRow("cannot start least squares from a zero row")
    h = np.array([[1.0 / nrm2]])
    c = np.array([u_row @ b])
    return LsState((index,), u_row[None, :].copy(), h, c, h @ c, b)


def ls_add_row(state, new_row, b, index=None):
    """Add one row to ``state`` via a bordered (block) inverse update."""
    u = np.asarray(new_row, dtype=float).ravel()
    if index is None:
        index = len(state.selected_rows)
    if index in state.selected_rows:
        raise ValueError(f"row {index} already selected")
    v = state.rows @ u
    h = state.inverse_gram @ v
    uu = float(u @ u)
    s = uu - float(v @ h)
    if uu == 0.0 or s <= GRAM_RCOND * uu:
        raise SingularGram(f"row {index} is numerically dependent on the selection")
    k = h.size
    inv = np.empty((k + 1, k + 1))
    inv[:k, :k] = state.inverse_gram + np.outer(h, h) / s
    inv[:k, k] = -h / s
    inv[k, :k] = -h / s
    inv[k, k] = 1.0 / s
    b = np.asarray(b, dtype=float).ravel()
    c = np.append(state.projected, u @ b)
    rows = np.vstack([state.rows, u])
    return LsState(
        state.selected_rows + (index,), rows, inv, c, _refined(rows, inv, c, b), b
    )


def ls_remove_rows(state, drop, b=None):
    """Remove the rows labelled ``drop`` and downdate the inverse Gram matrix.

    ``b`` defaults to the target stored in ``state``.
    """
    drop = set(drop)
    missing = drop.difference(state.selected_rows)
    if missing:
        raise ValueError(f"rows {sorted(missing)} are not selected")
    pos_d = [p for p, i in enumerate(state.selected_rows) if i in drop]
    pos_k = [p for p, i in enumerate(state.selected_rows) if i not in drop]
    if not pos_d:
        return state
    labels = tuple(state.selected_rows[p] for p in pos_k)
    if not pos_k:
        empty = np.empty((0, 0))
        return LsState((), state.rows[:0], empty, np.empty(0), np.empty(0), state.target)
    H = state.inverse_gram
    Hdd = H[np.ix_(pos_d, pos_d)]
    Hkd = H[np.ix_(pos_k, pos_d)]
    try:
        corr = Hkd @ np.linalg.solve(Hdd, Hkd.T)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("downdate of the inverse Gram matrix failed") from exc
    inv = H[np.ix_(pos_k, pos_k)] - corr
    inv = 0.5 * (inv + inv.T)
    c = state.projected[pos_k]
    rows = state.rows[pos_k]
    b = state.target if b is None else np.asarray(b, dtype=float).ravel()
    w = inv @ c if b is None else _refined(rows, inv, c, b)
    return LsState(labels, rows, inv, c, w, b)


def ls_direct(rows, b):
    """Reference dense least-squares solve of ``rows.T @ w ~= b``."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    w, *_ = np.linalg.lstsq(rows.T, np.asarray(b, dtype=float), rcond=None)
    return w
