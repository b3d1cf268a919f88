"""Command-line front end.

Subcommands: ``verify`` (run verification suites, emit a JSON report),
``trace`` (integrate dual-geodesics, export CSV/JSON, optionally compare two
connections), ``classify`` (weak/strong verdict of a semi-degenerate fixture).

Exit codes: 0 all claims pass, 1 claim failure, 2 usage error, 3 fixture or
input validation failure.  Reports embed every numeric input, so a report file
plus the package version pins the run; identical invocations write identical
bytes.  Output files are written atomically (temp file then rename).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .expressions import ExpressionError
from .fixtures import (
    CONNECTION_TAGS, FixtureError, FixtureValidationError, UnknownFixtureError,
    builtin, builtin_names, load, validate,
)
from .geodesics import curves_coincide, integrate_dual_geodesic
from .structure import classify
from .theorems import SUITES, SuiteNotApplicable, applicable_suites

EXIT_OK = 0
EXIT_CLAIM_FAILURE = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

DEFAULT_GRID_ENV = "DUALGEO_GRID"


def _default_grid() -> int:
    try:
        return int(os.environ.get(DEFAULT_GRID_ENV, "5"))
    except ValueError:
        return 5


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dualgeo-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _load_fixture(source: str, skip_validation: bool = False):
    if source in builtin_names():
        fixture = builtin(source)
        if not skip_validation:
            failures = validate(fixture)
            if failures:
                raise FixtureValidationError(fixture.name, failures)
        return fixture
    if os.path.exists(source):
        return load(source, validate_on_load=not skip_validation)
    raise UnknownFixtureError(
        f"{source!r} is neither a built-in fixture ({', '.join(builtin_names())}) "
        "nor an existing config file")


def _parse_vector(text: str, n: int, label: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(
            f"{label} needs {n} comma-separated components, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad {label}: {exc}") from exc


def cmd_verify(args) -> int:
    try:
        fixture = _load_fixture(args.fixture)
    except FixtureValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for failure in exc.failures:
            print(f"  - {json.dumps(failure, sort_keys=True)}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnknownFixtureError, FixtureError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    wanted = applicable_suites(fixture) if args.theorem == "all" else [args.theorem]
    reports = []
    for name in wanted:
        suite = SUITES[name]
        kwargs = {"per_axis": args.grid, "seed": args.seed}
        if name in ("1", "2"):
            kwargs["tol_algebraic"] = args.tol_algebraic
            kwargs["tol_curvature"] = args.tol_curvature
        try:
            reports.append(suite(fixture, **kwargs))
        except SuiteNotApplicable as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION

    bundle = {
        "fixture": fixture.name,
        "requested": args.theorem,
        "inputs": {
            "grid": args.grid,
            "seed": args.seed,
            "tol_algebraic": f"{args.tol_algebraic:.17g}",
            "tol_curvature": f"{args.tol_curvature:.17g}",
        },
        "reports": [r.to_dict() for r in reports],
        "verdict": "pass" if all(r.all_ok for r in reports) else "fail",
    }
    text = json.dumps(bundle, indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)

    for report in reports:
        for claim in sorted(report.claims, key=lambda c: c.claim_id):
            marker = "PASS" if claim.ok else "FAIL"
            print(f"[{marker}] {report.suite}:{claim.claim_id} "
                  f"residual={claim.residual:.3e} ({claim.direction} "
                  f"{claim.tolerance:.1e})", file=sys.stderr)
    return EXIT_OK if bundle["verdict"] == "pass" else EXIT_CLAIM_FAILURE


def cmd_trace(args) -> int:
    try:
        fixture = _load_fixture(args.fixture)
    except FixtureValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnknownFixtureError, FixtureError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        x0 = _parse_vector(args.x0, fixture.n, "--x0")
        w0 = _parse_vector(args.w0, fixture.n, "--w0")
        conn = fixture.connection(args.conn)
        compare = fixture.connection(args.compare) if args.compare else None
    except (argparse.ArgumentTypeError, FixtureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    traj = integrate_dual_geodesic(conn, fixture.metric, x0, w0, args.steps, args.h,
                                   box=fixture.box, singular_loci=fixture.singular_loci)
    if traj.exit_reason != "completed":
        print(f"note: integration halted early ({traj.exit_reason}) after "
              f"{len(traj.tau) - 1} steps; last state tau={traj.tau[-1]:.17g} "
              f"x={[f'{v:.17g}' for v in traj.x[-1]]}", file=sys.stderr)

    base = args.out or f"trajectory-{fixture.name}-{args.conn.replace('+', 'p').replace('-', 'm')}"
    if args.format in ("csv", "both"):
        traj.write_csv(base + ".csv")
        print(f"wrote {base}.csv", file=sys.stderr)
    if args.format in ("json", "both"):
        traj.write_json(base + ".json")
        print(f"wrote {base}.json", file=sys.stderr)

    if compare is not None:
        other = integrate_dual_geodesic(compare, fixture.metric, x0, w0, args.steps,
                                        args.h, box=fixture.box,
                                        singular_loci=fixture.singular_loci)
        cmp = curves_coincide(traj, other, args.tol)
        result = {
            "coincide": cmp.coincide,
            "hausdorff_a_to_b": f"{cmp.dist_a_to_b:.17g}",
            "hausdorff_b_to_a": f"{cmp.dist_b_to_a:.17g}",
            "tolerance": f"{cmp.tol:.17g}",
            "connections": [args.conn, args.compare],
        }
        print(json.dumps(result, indent=2, sort_keys=True))
        return EXIT_OK if cmp.coincide else EXIT_CLAIM_FAILURE
    return EXIT_OK


def cmd_classify(args) -> int:
    try:
        fixture = _load_fixture(args.fixture)
    except FixtureValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnknownFixtureError, FixtureError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not fixture.is_semidegenerate:
        print(f"error: fixture {fixture.name!r} is {fixture.kind}; classification "
              "applies to semi-degenerate fixtures only", file=sys.stderr)
        return EXIT_VALIDATION

    grid = fixture.grid(args.grid)
    cls = classify(fixture.metric, fixture.prolongation_tensor, fixture.s_covector,
                   grid, tol=args.tol)
    out = {
        "fixture": fixture.name,
        "classification": cls.verdict,
        "max_obstruction_norm": f"{cls.max_n_norm:.17g}",
        "tolerance": f"{cls.tol:.17g}",
        "grid": args.grid,
    }
    if cls.verdict == "WEAK":
        x = np.array([0.5 * (lo + hi) for lo, hi in fixture.box])
        T = cls.extracted_T(x)
        out["extracted_structure_tensor"] = {
            "point": [f"{v:.17g}" for v in x],
            "components": [[[f"{T[k, i, j]:.17g}" for j in range(fixture.n)]
                            for i in range(fixture.n)] for k in range(fixture.n)],
        }
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualgeo",
        description="Verify dual-projective equivalences of the connections "
                    "induced by second-order superintegrable systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run verification suites on a fixture")
    p_verify.add_argument("fixture", help="built-in name or config path")
    p_verify.add_argument("--theorem", choices=["1", "2", "weyl", "digamma", "all"],
                          default="all", help="suite selection (default: all applicable)")
    p_verify.add_argument("--grid", type=int, default=_default_grid(),
                          help=f"grid points per axis (default 5 or ${DEFAULT_GRID_ENV})")
    p_verify.add_argument("--seed", type=int, default=20250808)
    p_verify.add_argument("--tol-algebraic", type=float, default=1e-9)
    p_verify.add_argument("--tol-curvature", type=float, default=1e-6)
    p_verify.add_argument("--out", help="report path (default: stdout)")
    p_verify.set_defaults(func=cmd_verify)

    p_trace = sub.add_parser("trace", help="integrate a dual-geodesic")
    p_trace.add_argument("fixture")
    p_trace.add_argument("--conn", required=True,
                         help=f"connection tag, one of {', '.join(CONNECTION_TAGS)}")
    p_trace.add_argument("--x0", required=True,
                         help="start position, comma-separated, no spaces (e.g. 1,2)")
    p_trace.add_argument("--w0", required=True,
                         help="start velocity, comma-separated, no spaces")
    p_trace.add_argument("--steps", type=int, default=1000)
    p_trace.add_argument("--h", type=float, default=1e-3, help="fixed step size")
    p_trace.add_argument("--compare", help="second connection tag for coincidence check")
    p_trace.add_argument("--tol", type=float, default=1e-6,
                         help="coincidence tolerance for --compare")
    p_trace.add_argument("--format", choices=["csv", "json", "both"], default="csv")
    p_trace.add_argument("--out", help="output basename (extension added)")
    p_trace.set_defaults(func=cmd_trace)

    p_classify = sub.add_parser("classify", help="weak/strong classification")
    p_classify.add_argument("fixture")
    p_classify.add_argument("--grid", type=int, default=_default_grid())
    p_classify.add_argument("--tol", type=float, default=1e-8)
    p_classify.add_argument("--out", help="result path (default: stdout)")
    p_classify.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
