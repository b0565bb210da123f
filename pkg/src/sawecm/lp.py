"""Shared-point rules from a linear program.

Minimizing the sum of all weights subject to exact integration of every
subspace gives the block-diagonal standard-form problem

    min 1' z   s.t.   blockdiag(U1', ..., Uk') z = [b1; ...; bk],   z >= 0,

whose basic (vertex) solutions are sparse. It is solved here with a small
dense revised simplex (explicit basis inverse, two phases).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as la

from .exceptions import IllPosedBlock, NotOptimal
from .saw import AdaptiveRule

__all__ = [
    "LpStatus",
    "StandardFormLp",
    "LpSolution",
    "assemble_lp",
    "solve_simplex",
    "extract_rule",
    "lp_rule",
]

ILL_POSED_NORM = 1e-14
INFEASIBILITY_TOL = 1e-9
REFACTOR_EVERY = 50


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class StandardFormLp:
    """``min cost' z`` subject to ``constraint_matrix @ z == rhs``, ``z >= 0``.

    ``block_rows`` / ``block_size`` record the block layout (rows per block,
    variables per block) when the problem comes from :func:`assemble_lp`.
    """

    cost: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    block_rows: tuple = ()
    block_size: int = 0

    @property
    def shape(self):
        return self.constraint_matrix.shape


@dataclass(frozen=True)
class LpSolution:
    values: np.ndarray
    objective: float
    status: LpStatus
    pivot_count: int
    basis: tuple = ()

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL


def assemble_lp(family):
    """Block-diagonal standard form of the shared-point problem of ``family``.

    Raises
    ------
    IllPosedBlock
        When some block has ``||U' W|| < 1e-14`` (the zero rule would be
        optimal); augment that basis with the constant vector first.
    """
    bases = family.bases
    w = family.ecm_weights
    M = family.n_points
    rhs, rows = [], []
    for i, u in enumerate(bases):
        b = u.T @ w
        if np.linalg.norm(b) < ILL_POSED_NORM:
            raise IllPosedBlock(
                f"block {i} has vanishing integrals; augment it with the constant vector"
            )
        rhs.append(b)
        rows.append(u.shape[1])
    A = la.block_diag(*[u.T for u in bases])
    return StandardFormLp(
        cost=np.ones(M * len(bases)),
        constraint_matrix=A,
        rhs=np.concatenate(rhs),
        block_rows=tuple(rows),
        block_size=M,
    )


class _Tableau:
    """Revised-simplex state: basis list and explicit basis inverse."""

    def __init__(self, A, b, basis):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.refactor()

    def refactor(self):
        self.binv = la.inv(self.A[:, self.basis])
        self.since_refactor = 0

    @property
    def x_basic(self):
        return self.binv @ self.b

    def pivot(self, row, col):
        d = self.binv @ self.A[:, col]
        piv = d[row]
        # eta update of the inverse: row ops that turn d into e_row
        self.binv[row] /= piv
        d = d.copy()
        d[row] = 0.0
        self.binv -= np.outer(d, self.binv[row])
        self.basis[row] = col
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()


def _iterate(tab, cost, allowed, rule, limit, pivots, tol=1e-10):
    """Primal simplex iterations on ``tab``. Returns (status, pivots)."""
    A = tab.A
    scale = max(1.0, float(np.abs(cost).max()))
    while True:
        y = cost[tab.basis] @ tab.binv
        reduced = cost - y @ A
        reduced[tab.basis] = 0.0
        reduced[~allowed] = 0.0
        candidates = np.flatnonzero(reduced < -tol * scale)
        if candidates.size == 0:
            return LpStatus.OPTIMAL, pivots
        if pivots >= limit:
            return LpStatus.ITERATION_LIMIT, pivots
        if rule == "bland":
            col = int(candidates[0])
        else:
            col = int(candidates[np.argmin(reduced[candidates])])
        d = tab.binv @ A[:, col]
        xb = np.maximum(tab.x_basic, 0.0)
        pos = np.flatnonzero(d > tol * max(1.0, np.abs(d).max()))
        if pos.size == 0:
            return LpStatus.UNBOUNDED, pivots
        ratios = xb[pos] / d[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        if rule == "bland":
            # leave with the smallest variable index among tied rows
            row = int(min(ties, key=lambda r: tab.basis[r]))
        else:
            row = int(ties[np.argmax(d[ties])])
        tab.pivot(row, col)
        pivots += 1


def solve_simplex(lp, pivot_rule="bland", max_pivots=None):
    """Two-phase revised simplex for a :class:`StandardFormLp`.

    Parameters
    ----------
    lp : StandardFormLp
    pivot_rule : {"bland", "dantzig"}
        Bland's smallest-index rule (never cycles) or Dantzig's most negative
        reduced cost.
    max_pivots : int, optional
        Defaults to ``50 * n_variables``.

    Returns
    -------
    LpSolution
        ``values`` is a basic solution; entries above ``-1e-12`` that are
        negative through round-off are set to zero.
    """
    if pivot_rule not in ("bland", "dantzig"):
        raise ValueError("pivot_rule must be 'bland' or 'dantzig'")
    A = np.asarray(lp.constraint_matrix, dtype=float)
    b = np.asarray(lp.rhs, dtype=float).copy()
    c = np.asarray(lp.cost, dtype=float)
    m, n = A.shape
    if b.size != m or c.size != n:
        raise ValueError("cost, constraint matrix and rhs sizes disagree")
    limit = 50 * n if max_pivots is None else int(max_pivots)

    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b[flip] = -b[flip]
    # phase 1 on [A | I] with artificial basis
    A1 = np.hstack([A, np.eye(m)])
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab = _Tableau(A1, b, range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    status, pivots = _iterate(tab, cost1, allowed, pivot_rule, limit, 0)
    if status is LpStatus.ITERATION_LIMIT:
        return _solution(tab, c, n, status, pivots)
    infeas = float(cost1[tab.basis] @ tab.x_basic)
    if infeas > INFEASIBILITY_TOL * max(1.0, float(b.max(initial=0.0))):
        return _solution(tab, c, n, LpStatus.INFEASIBLE, pivots)

    # drive zero-level artificials out of the basis where possible
    for row in range(m):
        if tab.basis[row] < n:
            continue
        alpha = tab.binv[row] @ A
        nonbasic = np.setdiff1d(np.arange(n), tab.basis)
        hits = nonbasic[np.abs(alpha[nonbasic]) > 1e-9]
        if hits.size:
            tab.pivot(row, int(hits[0]))
            pivots += 1
        # otherwise the row is redundant and the artificial stays at zero

    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    cost2 = np.concatenate([c, np.zeros(m)])
    tab.refactor()
    status, pivots = _iterate(tab, cost2, allowed, pivot_rule, limit, pivots)
    return _solution(tab, c, n, status, pivots)


def _solution(tab, c, n, status, pivots):
    basis = np.asarray(tab.basis)
    try:
        xb = la.solve(tab.A[:, basis], tab.b)
    except la.LinAlgError:
        xb = tab.x_basic
    x = np.zeros(tab.A.shape[1])
    x[basis] = xb
    x[(x < 0) & (x >= -1e-12)] = 0.0
    values = x[:n]
    return LpSolution(
        values=values,
        objective=float(c @ values),
        status=status,
        pivot_count=int(pivots),
        basis=tuple(int(j) for j in basis if j < n),
    )


def extract_rule(solution, family, zero_floor=1e-10):
    """Shared points and per-subspace weights read off an LP solution.

    A point belongs to the rule when its weights summed over all blocks
    exceed ``zero_floor``.

    Raises
    ------
    NotOptimal
        If the solution status is not optimal.
    """
    if not solution.optimal:
        raise NotOptimal(f"LP solution status is {solution.status.value}")
    k, M = family.n_subspaces, family.n_points
    z = np.asarray(solution.values, dtype=float).reshape(k, M)
    indices = np.flatnonzero(z.sum(axis=0) > zero_floor)
    weights = np.vstack(
        [family.to_point_weights(indices, z[i, indices]) for i in range(k)]
    )
    weights[weights < 0] = 0.0
    return AdaptiveRule(
        indices=indices,
        weights=weights,
        mode_counts=tuple(family.mode_counts()),
        strategy="lp",
    )


def lp_rule(family, pivot_rule="bland", zero_floor=1e-10):
    """Assemble, solve and extract in one call; returns (rule, solution)."""
    sol = solve_simplex(assemble_lp(family), pivot_rule)
    return extract_rule(sol, family, zero_floor), sol
