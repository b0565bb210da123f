"""Benchmark families and data assembly.

Gauss-Legendre grids, scalar and vector-valued monomial families, windowing
of a snapshot sequence into overlapping clusters, a synthetic nonlinear
snapshot manifold, the per-cluster integrand matrices built from it, and the
residual metrics used to check a rule.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateWindow
from .linalg import as_matrix, truncated_svd
from .saw import SubspaceFamily

__all__ = [
    "QuadratureGrid",
    "ClusterWindowing",
    "ErrorReport",
    "gauss_legendre",
    "composite_gauss_legendre",
    "element_aggregated",
    "monomial_family",
    "vector_monomial_family",
    "sliding_windows",
    "cluster_windows",
    "synthetic_manifold",
    "cubic_softening",
    "integrand_matrices",
    "evaluate_rule",
    "full_rule",
]


@dataclass(frozen=True)
class QuadratureGrid:
    """Points and strictly positive weights of a full-order rule.

    ``domain`` is ``(a, b)`` for an interval, or the string
    ``"element-aggregated"`` when every row stands for one element and the
    weights are all ones.
    """

    points: np.ndarray
    weights: np.ndarray
    domain: object = (-1.0, 1.0)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if p.size != w.size:
            raise ValueError("points and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be strictly positive")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @property
    def size(self):
        return self.weights.size

    def __len__(self):
        return self.size

    def integrate(self, values):
        return np.asarray(values).T @ self.weights


def gauss_legendre(n, domain=(-1.0, 1.0)):
    """n-point Gauss-Legendre rule on the interval ``domain`` (nodes ascending)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    a, b = map(float, domain)
    if not b > a:
        raise ValueError("domain must be an interval (a, b) with b > a")
    x, w = np.polynomial.legendre.leggauss(int(n))
    half = 0.5 * (b - a)
    return QuadratureGrid(a + half * (x + 1.0), half * w, (a, b))


def composite_gauss_legendre(n_elements, points_per_element, domain=(0.0, 1.0)):
    """Gauss-Legendre rule repeated on ``n_elements`` equal sub-intervals."""
    a, b = map(float, domain)
    edges = np.linspace(a, b, n_elements + 1)
    ref = gauss_legendre(points_per_element)
    h = np.diff(edges)
    x = (edges[:-1, None] + 0.5 * h[:, None] * (ref.points[None, :] + 1.0)).ravel()
    w = (0.5 * h[:, None] * ref.weights[None, :]).ravel()
    return QuadratureGrid(x, w, (a, b))


def element_aggregated(sample_matrix, grid, points_per_element):
    """Sum per-point contributions ``W_g * A(g, :)`` element by element.

    Returns the aggregated matrix (one row per element) and an all-ones
    weight vector, i.e. the integrand contributions of whole elements.
    """
    A = as_matrix(sample_matrix)
    if A.shape[0] % points_per_element:
        raise ValueError("row count is not a multiple of points_per_element")
    contrib = grid.weights[:, None] * A
    agg = contrib.reshape(-1, points_per_element, A.shape[1]).sum(axis=1)
    ne = agg.shape[0]
    centres = grid.points.reshape(ne, points_per_element).mean(axis=1)
    return agg, QuadratureGrid(centres, np.ones(ne), "element-aggregated")


def monomial_family(grid, degrees, **family_options):
    """One single-column sample matrix ``x**mu`` per degree."""
    degrees = [int(d) for d in degrees]
    if any(d < 0 for d in degrees):
        raise ValueError("degrees must be nonnegative")
    x = grid.points
    return SubspaceFamily(
        [x[:, None] ** d for d in degrees], grid.weights, **family_options
    )


def vector_monomial_family(grid, degrees, **family_options):
    """Two-column sample matrices ``[1 | x**mu]`` per degree."""
    degrees = [int(d) for d in degrees]
    if any(d < 0 for d in degrees):
        raise ValueError("degrees must be nonnegative")
    x = grid.points
    one = np.ones_like(x)
    return SubspaceFamily(
        [np.column_stack([one, x**d]) for d in degrees], grid.weights, **family_options
    )


@dataclass(frozen=True)
class ClusterWindowing:
    """Index windows (0-based) over ``snapshot_count`` snapshots.

    ``overlap`` counts the snapshots a window shares with its predecessor on
    one side; with ``window_size=3`` and ``overlap=1`` this yields the
    consecutive triples ``{i-1, i, i+1}`` (adjacent windows share two
    snapshots, k = P - 2).
    """

    snapshot_count: int
    window_size: int
    overlap: int
    clusters: tuple

    @property
    def n_clusters(self):
        return len(self.clusters)

    def __len__(self):
        return self.n_clusters

    def __iter__(self):
        return iter(self.clusters)


def sliding_windows(P, window_size=3, overlap=1):
    """Windows of ``window_size`` whose cores (the snapshots left after
    trimming ``overlap`` from both ends) tile the sequence."""
    core = window_size - 2 * overlap
    if window_size < 1 or overlap < 0 or core < 1:
        raise ValueError("need window_size >= 2 * overlap + 1")
    if P < window_size:
        raise ValueError(f"{P} snapshots cannot fill a window of {window_size}")
    starts = list(range(0, P - window_size + 1, core))
    if starts[-1] + window_size < P:
        starts.append(P - window_size)
    clusters = tuple(tuple(range(s, s + window_size)) for s in starts)
    return ClusterWindowing(P, window_size, overlap, clusters)


def cluster_windows(P, k, overlap=1):
    """``k`` contiguous clusters covering ``P`` snapshots.

    The interior snapshots are split into ``k`` nearly equal cores and each
    core is widened by ``overlap`` snapshots on both sides, so consecutive
    clusters share ``2 * overlap`` snapshots. ``k = P - 2`` with ``overlap=1``
    reproduces :func:`sliding_windows` with triples; ``k = 1`` is one cluster
    holding every snapshot.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return ClusterWindowing(P, P, 0, (tuple(range(P)),))
    interior = P - 2 * overlap
    if k > interior:
        raise ValueError(f"at most {interior} clusters fit {P} snapshots")
    bounds = np.linspace(0, interior, k + 1).round().astype(int) + overlap
    clusters = tuple(
        tuple(range(lo - overlap, hi + overlap)) for lo, hi in zip(bounds[:-1], bounds[1:])
    )
    size = max(len(c) for c in clusters)
    return ClusterWindowing(P, size, overlap, clusters)


def _trajectory(P, rng, n_legs, mode):
    """Piecewise affine path in parameter space sampled at P steps."""
    if mode == "frozen":
        theta = rng.uniform(0.3, 0.7, size=3)
        return np.tile(theta, (P, 1))
    if mode != "piecewise":
        raise ValueError(f"unknown trajectory mode {mode!r}")
    vertices = rng.uniform(0.0, 1.0, size=(n_legs + 1, 3))
    s = np.linspace(0.0, n_legs, P)
    leg = np.minimum(s.astype(int), n_legs - 1)
    t = (s - leg)[:, None]
    return (1.0 - t) * vertices[leg] + t * vertices[leg + 1]


BUMP_WIDTH = 0.01


def _field(x, theta):
    """Travelling bump on [0, 1] for parameters theta (P x 3).

    The centre, width and height follow the three parameters; a weak sine
    mode scaled by the width parameter breaks the pure translation.
    """
    a, b, c = theta[:, 0:1], theta[:, 1:2], theta[:, 2:3]
    x = x[None, :]
    centre = 0.15 + 0.7 * a
    width = BUMP_WIDTH * (0.5 + b)
    return (0.5 + 0.5 * c) * np.exp(-((x - centre) ** 2) / width) + 0.2 * b * np.sin(
        np.pi * x
    )


def synthetic_manifold(spatial_points=200, steps=400, mode="piecewise", seed=0,
                       n_legs=4, grid=None):
    """Snapshots of a travelling bump whose parameters follow a piecewise affine path.

    Parameters
    ----------
    spatial_points : int
        Number of points M (ignored when ``grid`` is given). The default grid
        is a composite 4-point Gauss rule on [0, 1], so M must be a multiple
        of 4.
    steps : int
        Number of snapshots P.
    mode : {"piecewise", "frozen"}
        ``"frozen"`` keeps the parameters constant (identical snapshots).
    seed : int
        Seeds the path vertices.

    Returns
    -------
    snapshots : (M, P) ndarray
    grid : QuadratureGrid
    """
    if steps < 3:
        raise ValueError("need at least 3 steps")
    if grid is None:
        if spatial_points < 4 or spatial_points % 4:
            raise ValueError("spatial_points must be a positive multiple of 4")
        grid = composite_gauss_legendre(spatial_points // 4, 4, (0.0, 1.0))
    rng = np.random.default_rng(seed)
    theta = _trajectory(steps, rng, n_legs, mode)
    return _field(grid.points, theta).T.copy(), grid


def cubic_softening(beta=0.5):
    """Pointwise nonlinearity ``v + beta * v**3``."""
    return lambda v: v + beta * v**3


def integrand_matrices(snapshots, windowing, displacement_svd_tol=0.0, grid=None,
                       weights=None, nonlinearity=None, svd_tolerance=0.0,
                       **family_options):
    """Per-cluster integrand sample matrices of a snapshot sequence.

    For cluster ``i`` the window snapshots are compressed into modes ``Phi``
    (truncated SVD, ``displacement_svd_tol``), each snapshot ``d`` is projected
    to ``Phi @ Phi.T @ d``, and the integrand column for mode ``l`` and
    snapshot ``j`` is ``Phi[:, l] * nonlinearity(d_j)`` evaluated pointwise.
    The matrix of cluster ``i`` therefore has ``P_i * n_i`` columns.

    Raises
    ------
    DegenerateWindow
        If every snapshot of a window is zero.
    """
    D = as_matrix(snapshots, "snapshots")
    if weights is None:
        if grid is None:
            raise ValueError("pass either grid or weights")
        weights = grid.weights
    sigma = nonlinearity or cubic_softening()
    mats = []
    for i, window in enumerate(windowing.clusters):
        Dw = D[:, list(window)]
        if not np.any(Dw):
            raise DegenerateWindow(f"window {i} holds only zero snapshots")
        phi = np.array(truncated_svd(Dw, displacement_svd_tol).left)
        proj = phi @ (phi.T @ Dw)
        act = sigma(proj)
        # column (j, l) = phi_l * sigma(d_j), snapshot-major
        mats.append((act[:, :, None] * phi[:, None, :]).reshape(D.shape[0], -1))
    return SubspaceFamily(mats, weights, svd_tolerance=svd_tolerance, **family_options)


@dataclass(frozen=True)
class ErrorReport:
    per_subspace_relative_residual: np.ndarray
    max_residual: float
    snapshot_reconstruction_error: float = None

    def as_dict(self):
        out = {
            "per_subspace_relative_residual": [
                float(r) for r in self.per_subspace_relative_residual
            ],
            "max_residual": float(self.max_residual),
        }
        if self.snapshot_reconstruction_error is not None:
            out["snapshot_reconstruction_error"] = float(self.snapshot_reconstruction_error)
        return out


def evaluate_rule(rule, family):
    """Relative integration residual of ``rule`` on every sample matrix.

    ``rule`` needs ``indices`` (0-based) and ``weights`` (k x card(E)).
    A zero exact integral integrated to zero counts as residual 0.
    """
    idx = np.asarray(rule.indices, dtype=int)
    wts = np.atleast_2d(np.asarray(rule.weights, dtype=float))
    if idx.size and (idx.min() < 0 or idx.max() >= family.n_points):
        raise IndexError("rule indices out of range")
    if wts.shape != (family.n_subspaces, idx.size):
        raise ValueError(
            f"weights have shape {wts.shape}, expected {(family.n_subspaces, idx.size)}"
        )
    res = np.empty(family.n_subspaces)
    for i, A in enumerate(family.sample_matrices):
        exact = A.T @ family.full_weights
        err = np.linalg.norm(A[idx].T @ wts[i] - exact)
        ref = np.linalg.norm(exact)
        res[i] = 0.0 if err == 0.0 else (err / ref if ref > 0 else np.inf)
    return ErrorReport(res, float(res.max()) if res.size else 0.0)


def full_rule(family):
    """The full-order rule written as a shared-point rule (every point, W)."""
    from .saw import AdaptiveRule

    M, k = family.n_points, family.n_subspaces
    return AdaptiveRule(
        indices=np.arange(M),
        weights=np.tile(family.full_weights, (k, 1)),
        mode_counts=tuple(family.mode_counts()),
        strategy="full",
    )
