"""Greedy empirical cubature with an optional initial candidate set.

Given a basis matrix ``U`` (M x m) whose columns sample the integrand modes at
the M full-order integration points, and the positive full-order weights ``W``,
:func:`ecm_select` picks ``m`` rows ``E`` and positive weights ``w`` with
``U[E].T @ w == U.T @ W``. Candidates listed in ``initial_candidates`` are used
first; the remaining points only enter the pool once the restricted pool has
failed repeatedly or run dry.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import nnls

from .exceptions import NoConvergence, SingularGram
from .linalg import as_matrix, as_weights, ls_add_row, ls_init, ls_remove_rows

__all__ = ["EcmResult", "ecm_select", "conical_hull_feasible"]

NEGATIVE_WEIGHT_TOL = 1e-12
SECOND_CHANCES = 3


@dataclass(frozen=True)
class EcmResult:
    """Output of :func:`ecm_select`. ``indices`` are 0-based row numbers."""

    indices: np.ndarray
    weights: np.ndarray
    residual_norm: float
    iterations: int
    enlarged: bool
    overlap_with_candidates: int
    restarted: bool = False

    def __len__(self):
        return self.indices.size


def _candidate_sets(row_norms, initial_candidates, low_norm_floor):
    M = row_norms.size
    healthy = row_norms > low_norm_floor
    if initial_candidates is None or len(initial_candidates) == 0:
        pool = [int(i) for i in np.flatnonzero(healthy)]
        return pool, []
    y0 = sorted({int(i) for i in initial_candidates})
    if y0[0] < 0 or y0[-1] >= M:
        raise IndexError(f"initial candidates must lie in [0, {M})")
    inside = np.zeros(M, dtype=bool)
    inside[y0] = True
    # low-norm filtering only applies to the complement
    complement = [int(i) for i in np.flatnonzero(~inside & healthy)]
    return y0, complement


def _release(in_pool, parked, state):
    chosen = set(state.selected_rows) if state is not None else set()
    back = [p for p in parked if p not in chosen]
    in_pool[back] = True


def _refine(rows, weights, b):
    """Re-solve the final square system directly.

    The inverse Gram matrix squares the conditioning of the selected rows, so
    its weights can lose accuracy when those rows are nearly dependent. An LU
    solve of ``rows.T @ w = b`` is backward stable; it is kept when the weights
    stay positive and the residual improves.
    """
    residual = float(np.linalg.norm(rows.T @ weights - b))
    try:
        direct = la.solve(rows.T, b)
    except (la.LinAlgError, ValueError):
        return weights, residual
    if np.all(direct > 0):
        r = float(np.linalg.norm(rows.T @ direct - b))
        if r < residual:
            return direct, r
    return weights, residual


def ecm_select(
    basis,
    full_weights,
    initial_candidates=None,
    failure_threshold=10,
    low_norm_floor=1e-6,
    integrals=None,
    max_iterations=None,
):
    """Select integration points and positive weights for one basis matrix.

    Parameters
    ----------
    basis : (M, m) array_like
        Columnwise-orthonormal basis of the integrand (sampled at M points).
    full_weights : (M,) array_like
        Strictly positive full-order weights ``W``.
    initial_candidates : iterable of int, optional
        0-based indices tried first. ``None`` or empty means all points.
    failure_threshold : int
        Number of consecutive iterations without growth of the selected set
        tolerated before the complement joins the candidate pool.
    low_norm_floor : float
        Rows with Euclidean norm at or below this value never enter the pool
        (the initial candidates themselves are exempt).
    integrals : (m,) array_like, optional
        Target vector; defaults to ``basis.T @ full_weights``.
    max_iterations : int, optional
        Safety cap on greedy iterations (default ``20 * M + 100``).

    Returns
    -------
    EcmResult

    Raises
    ------
    NoConvergence
        If the pool is exhausted before ``m`` points carry positive weights.
    """
    U = as_matrix(basis, "basis")
    M, m = U.shape
    W = as_weights(full_weights, M)
    if m > M:
        raise ValueError(f"basis has more columns ({m}) than rows ({M})")
    b = U.T @ W if integrals is None else np.asarray(integrals, dtype=float).ravel()
    if b.size != m:
        raise ValueError("integrals must have one entry per basis column")
    if max_iterations is None:
        max_iterations = 20 * M + 100

    row_norms = np.linalg.norm(U, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        G = np.where(row_norms[:, None] > 0, U / row_norms[:, None], 0.0)

    y, complement = _candidate_sets(row_norms, initial_candidates, low_norm_floor)
    y0 = set(y) if initial_candidates is not None and len(initial_candidates) else set()
    enlarged = False
    in_pool = np.zeros(M, dtype=bool)
    in_pool[y] = True
    # rows set aside (singular Gram update, or a pick that only led back to an
    # already visited selection) until E reaches a new maximum size
    parked = []
    visited = set()
    best = 0

    state = None
    r = b.copy()
    failures = 0
    iterations = 0
    second_chances = SECOND_CHANCES
    while state is None or len(state) < m:
        if not (in_pool.any() or complement):
            if not parked or not second_chances:
                break
            # stalled with only parked rows left: give them another round
            second_chances -= 1
            _release(in_pool, parked, state)
            parked = []
            visited.clear()
        if complement and (failures > failure_threshold or not in_pool.any()):
            in_pool[complement] = True
            complement = []
            enlarged = True
        if iterations >= max_iterations:
            break
        iterations += 1
        pool = np.flatnonzero(in_pool)
        # argmax returns the first maximizer, i.e. the lowest index wins ties
        i = int(pool[np.argmax(G[pool] @ r)])
        previous = 0 if state is None else len(state)
        try:
            if state is None or len(state) == 0:
                state = ls_init(U[i], b, index=i)
            else:
                state = ls_add_row(state, U[i], b, index=i)
        except SingularGram:
            in_pool[i] = False
            parked.append(i)
            failures += 1
            continue
        in_pool[i] = False

        # weights in [-NEGATIVE_WEIGHT_TOL, 0] are dropped along with negative ones
        negative = [
            label for label, w in zip(state.selected_rows, state.weights) if w <= 0.0
        ]
        if negative:
            in_pool[[g for g in negative if g not in parked]] = True
            state = ls_remove_rows(state, negative, b)

        key = frozenset(state.selected_rows)
        if key in visited:
            # the selection repeats itself: set the pick aside to break the cycle
            in_pool[i] = False
            parked.append(i)
        visited.add(key)

        if len(state) > previous:
            failures = 0
        else:
            failures += 1
        if len(state) > best:
            best = len(state)
            if parked:
                _release(in_pool, parked, state)
                parked = []
        r = b - state.rows.T @ state.weights if len(state) else b.copy()

    if state is None or len(state) < m:
        got = 0 if state is None else len(state)
        if y0:
            # the restricted search stalled; a search over every point is the
            # case with a guaranteed feasible rule, so fall back to it
            try:
                res = ecm_select(
                    U, W, None, failure_threshold, low_norm_floor, b, max_iterations
                )
            except NoConvergence:
                pass
            else:
                overlap = len(y0.intersection(res.indices.tolist()))
                return EcmResult(
                    res.indices, res.weights, res.residual_norm,
                    iterations + res.iterations, True, overlap, True,
                )
        raise NoConvergence(
            f"candidate pool exhausted with {got} of {m} points selected"
        )

    order = np.argsort(state.selected_rows, kind="stable")
    indices = np.asarray(state.selected_rows, dtype=int)[order]
    weights, residual = _refine(U[indices], np.asarray(state.weights)[order], b)
    overlap = len(y0.intersection(indices.tolist())) if y0 else 0
    return EcmResult(
        indices=indices,
        weights=weights,
        residual_norm=residual,
        iterations=iterations,
        enlarged=enlarged,
        overlap_with_candidates=overlap,
    )


def conical_hull_feasible(basis_rows, b, rtol=1e-9):
    """Whether ``b`` is a nonnegative combination of the rows of ``basis_rows``.

    Decided through a nonnegative least-squares fit; feasible when the NNLS
    residual is below ``rtol * ||b||``.
    """
    rows = np.atleast_2d(np.asarray(basis_rows, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    _, rnorm = nnls(rows.T, b)
    return bool(rnorm <= rtol * max(np.linalg.norm(b), np.finfo(float).tiny))
