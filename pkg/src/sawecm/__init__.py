"""Reduced cubature rules that share one set of points across several
integrand subspaces, with nonnegative weights per subspace."""

from .ecm import EcmResult, conical_hull_feasible, ecm_select
from .estimators import EmpiricalCubature, LinearProgramCubature, SubspaceAdaptiveCubature
from .exceptions import (
    AlreadyContained,
    CubatureError,
    DegenerateWindow,
    IllPosedBlock,
    NoConvergence,
    NonpositiveWeight,
    NotOptimal,
    ParseError,
    SingularGram,
    ZeroMatrix,
    ZeroRow,
)
from .io import RuleFile, emit_rule, parse_rule, read_family, read_rule, write_rule
from .linalg import augment_with_constant, numerical_rank, truncated_svd, weighted_svd
from .lp import LpSolution, LpStatus, assemble_lp, extract_rule, lp_rule, solve_simplex
from .problems import (
    ErrorReport,
    QuadratureGrid,
    cluster_windows,
    composite_gauss_legendre,
    evaluate_rule,
    gauss_legendre,
    integrand_matrices,
    monomial_family,
    synthetic_manifold,
    vector_monomial_family,
)
from .saw import (
    AdaptiveRule,
    Ordering,
    SubspaceFamily,
    global_dimension,
    global_ecm,
    independent_rule,
    saw_ecm,
)

__version__ = "0.1.0"
