"""Command-line front end.

    sawecm demo {poly-scalar,poly-vector,manifold} [options]
    sawecm run FAMILY.csv [options]
    sawecm verify RULE.json FAMILY.csv [--tolerance TOL]

Exit codes: 0 success, 1 verification failure, 2 input error, 3 convergence
failure.
"""

import argparse
import json
import os
import sys
import time

from .exceptions import CubatureError, NoConvergence, NotOptimal, ParseError
from .io import (
    read_family,
    read_rule,
    rule_to_file,
    write_family,
    write_rule,
    write_sparsity,
    write_summary,
)
from .lp import lp_rule
from .problems import (
    cluster_windows,
    evaluate_rule,
    gauss_legendre,
    integrand_matrices,
    monomial_family,
    synthetic_manifold,
    vector_monomial_family,
)
from .saw import Ordering, global_ecm, independent_rule, saw_ecm

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_CONVERGENCE = 0, 1, 2, 3
STRATEGIES = ("global-ecm", "independent-ecm", "saw-ecm", "lp")


class InputError(Exception):
    pass


def _strategies(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in STRATEGIES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown strategies {bad}; choose from {', '.join(STRATEGIES)}"
        )
    return names


def _solver_options(p):
    p.add_argument("--svd-tol", type=float, default=0.0, help="SVD truncation tolerance")
    p.add_argument("--ordering", choices=("natural", "random"), default="natural")
    p.add_argument("--seed", type=int, default=0, help="seed of the random ordering")
    p.add_argument("--lambda", dest="failure_threshold", type=int, default=10,
                   help="failures before the candidate pool is enlarged")
    p.add_argument("--low-norm-floor", type=float, default=1e-6)
    p.add_argument("--zero-floor", type=float, default=1e-10,
                   help="LP weights at or below this are treated as zero")
    p.add_argument("--pivot", choices=("bland", "dantzig"), default="bland")
    p.add_argument("--augment", choices=("auto", "always", "never"), default="auto",
                   help="constant-function augmentation of each basis")
    p.add_argument("--out-dir", default=".")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sawecm", description="Shared-point cubature rules for several subspaces."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="run a built-in family through several strategies")
    demo.add_argument("name", choices=("poly-scalar", "poly-vector", "manifold"))
    demo.add_argument("--strategies", type=_strategies, default=None,
                      help="comma separated subset of " + ",".join(STRATEGIES))
    demo.add_argument("--clusters", type=int, default=None,
                      help="manifold cluster count (default: steps - 2)")
    demo.add_argument("--points", type=int, default=200, help="manifold grid size")
    demo.add_argument("--steps", type=int, default=400, help="manifold snapshot count")
    demo.add_argument("--displacement-tol", type=float, default=1e-8,
                      help="manifold per-cluster snapshot SVD tolerance")
    demo.add_argument("--write-family", action=argparse.BooleanOptionalAction,
                      default=None, help="also write family.csv (default: poly demos only)")
    _solver_options(demo)

    run = sub.add_parser("run", help="compute a rule for a family CSV")
    run.add_argument("family")
    run.add_argument("--strategy", choices=STRATEGIES, default="saw-ecm")
    run.add_argument("-o", "--output", default=None,
                     help="rule file (default: OUT_DIR/rule-STRATEGY.json)")
    _solver_options(run)

    verify = sub.add_parser("verify", help="check a rule against a family CSV")
    verify.add_argument("rule")
    verify.add_argument("family")
    verify.add_argument("--tolerance", type=float, default=1e-8)
    return parser


def _ordering(args):
    return Ordering.random(args.seed) if args.ordering == "random" else Ordering()


def _solve(family, strategy, args):
    if strategy == "lp":
        rule, _ = lp_rule(family, args.pivot, args.zero_floor)
        return rule
    solver = {"global-ecm": global_ecm, "independent-ecm": independent_rule,
              "saw-ecm": saw_ecm}[strategy]
    return solver(family, args.failure_threshold, args.low_norm_floor)


def _metadata(args, strategy):
    meta = {
        "strategy": strategy,
        "svd_tolerance": args.svd_tol,
        "ordering": args.ordering,
        "seed": args.seed,
        "failure_threshold": args.failure_threshold,
        "low_norm_floor": args.low_norm_floor,
        "augment": args.augment,
    }
    if strategy == "lp":
        meta.update(pivot=args.pivot, zero_floor=args.zero_floor)
    return meta


def _demo_family(args):
    opts = dict(svd_tolerance=args.svd_tol, ordering=_ordering(args), augment=args.augment)
    if args.name == "poly-scalar":
        return monomial_family(gauss_legendre(20, (0.0, 1.0)), range(6), **opts)
    if args.name == "poly-vector":
        return vector_monomial_family(gauss_legendre(50, (0.0, 1.0)), range(20), **opts)
    snapshots, grid = synthetic_manifold(args.points, args.steps, seed=args.seed)
    k = args.steps - 2 if args.clusters is None else args.clusters
    return integrand_matrices(
        snapshots, cluster_windows(args.steps, k), args.displacement_tol, grid, **opts
    )


def cmd_demo(args):
    try:
        family = _demo_family(args)
    except (ValueError, CubatureError) as exc:
        raise InputError(str(exc)) from exc
    names = args.strategies
    if names is None:
        # the dense simplex is sized for the polynomial demos
        names = [s for s in STRATEGIES if not (args.name == "manifold" and s == "lp")]
    write_fam = args.write_family if args.write_family is not None else args.name != "manifold"
    if write_fam:
        write_family(os.path.join(args.out_dir, "family.csv"), family)
    rows = []
    for name in names:
        t0 = time.perf_counter()
        rule = _solve(family, name, args)
        elapsed = time.perf_counter() - t0
        report = evaluate_rule(rule, family)
        write_rule(os.path.join(args.out_dir, f"rule-{name}.json"),
                   rule_to_file(rule, family.n_points, _metadata(args, name)))
        write_sparsity(os.path.join(args.out_dir, f"sparsity-{name}.csv"),
                       rule, family.n_points)
        rows.append({
            "strategy": name,
            "points": rule.n_points,
            "max_residual": f"{report.max_residual:.3e}",
            "wall_time": f"{elapsed:.3f}",
        })
        print(f"{name:16s} points={rule.n_points:5d} "
              f"max_residual={report.max_residual:.3e} time={elapsed:.2f}s")
    write_summary(os.path.join(args.out_dir, "summary.csv"), rows)
    return EXIT_OK


def cmd_run(args):
    family = read_family(
        args.family, svd_tolerance=args.svd_tol, ordering=_ordering(args),
        augment=args.augment,
    )
    rule = _solve(family, args.strategy, args)
    out = args.output or os.path.join(args.out_dir, f"rule-{args.strategy}.json")
    write_rule(out, rule_to_file(rule, family.n_points, _metadata(args, args.strategy)))
    print(f"{args.strategy}: {rule.n_points} points -> {out}")
    return EXIT_OK


def cmd_verify(args):
    rf = read_rule(args.rule)
    family = read_family(args.family)
    if rf.M != family.n_points or rf.k != family.n_subspaces:
        raise InputError(
            f"rule is for M={rf.M}, k={rf.k}; family has "
            f"M={family.n_points}, k={family.n_subspaces}"
        )
    report = evaluate_rule(rf.to_rule(), family)
    print(json.dumps(report.as_dict(), indent=1))
    return EXIT_OK if report.max_residual <= args.tolerance else EXIT_VERIFY


COMMANDS = {"demo": cmd_demo, "run": cmd_run, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NoConvergence as exc:
        print(f"sawecm: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except NotOptimal as exc:
        print(f"sawecm: linear program failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InputError, ParseError, OSError, ValueError, IndexError) as exc:
        print(f"sawecm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CubatureError as exc:
        print(f"sawecm: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
