"""Command-line entry point: ``gkschur <command> ...``.

Matrices are read from JSON (``{"rows", "cols", "re", "im"}``) or Matrix
Market files. Results go to stdout as JSON. Exit status is 0 on success,
2 for invalid input, 3 for a structure mismatch and 4 for a numerical
failure.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

from .errors import GKSchurError, IllConditionedStructureWarning
from .frobenius import holder_match, triangular_jordan
from .lab import KINDS, REPRODUCTIONS, reproduce, run_experiment
from .matching import lipschitz_match
from .matrixio import read_matrix, write_matrix
from .numcore import DEFAULT_TOL, SubspaceBasis, Tolerance
from .structure import gk_numbers, jordan_structure
from .subspaces import gap, semigap


def _tol(args):
    return Tolerance(rank_rel=args.tol) if args.tol is not None else DEFAULT_TOL


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_analyze(args):
    A = read_matrix(args.matrix)
    omega = jordan_structure(A, _tol(args))
    g = gk_numbers(omega)
    _emit({"structure": omega.to_json(), "gk": g.to_json(), "warnings": list(omega.warnings)})


def cmd_gap(args):
    M = SubspaceBasis(read_matrix(args.basis_a))
    N = SubspaceBasis(read_matrix(args.basis_b))
    if args.semi:
        _emit({"semigap": semigap(M, N)})
    else:
        _emit({"gap": gap(M, N)})


def cmd_match(args):
    T0 = read_matrix(args.t0)
    B = read_matrix(args.b)
    matcher = lipschitz_match if args.mode == "lipschitz" else holder_match
    res = matcher(T0, B, _tol(args))
    prefix = args.out_prefix
    if prefix:
        write_matrix(f"{prefix}_U.json", res.U)
        write_matrix(f"{prefix}_T.json", res.T)
    _emit(
        {
            "mode": args.mode,
            "distance": res.distance,
            "input_distance": res.input_distance,
            "reference": res.reference,
            "residuals": res.residuals,
            "warnings": list(res.warnings),
        }
    )


def cmd_frobenius(args):
    fac = triangular_jordan(read_matrix(args.t0), tol=_tol(args))
    _emit(fac.to_json())


def cmd_experiment(args):
    base = read_matrix(args.base)
    scales = [float(x) for x in args.scales.split(",") if x.strip()]
    report = run_experiment(base, args.kind, scales, args.trials, args.seed, _tol(args), workers=args.workers)
    _emit(report.to_json(), args.out)
    if args.out:
        Path(args.out).with_suffix(".csv").write_text(report.to_csv())


def cmd_repro(args):
    _emit(reproduce(args.name), args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="gkschur", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def tol_opt(q):
        q.add_argument("--tol", type=float, default=None, help="relative rank cutoff (default 1e-8)")

    q = sub.add_parser("analyze", help="Jordan structure and GK numbers of a matrix")
    q.add_argument("matrix")
    tol_opt(q)
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("gap", help="gap or semigap between two orthonormal bases")
    q.add_argument("basis_a")
    q.add_argument("basis_b")
    q.add_argument("--semi", action="store_true", help="one-sided gap from A to B")
    q.set_defaults(func=cmd_gap)

    q = sub.add_parser("match", help="nearby Schur factorization of B relative to triangular T0")
    q.add_argument("t0")
    q.add_argument("b")
    q.add_argument("--mode", choices=("lipschitz", "holder"), default="lipschitz")
    q.add_argument("--out-prefix", default=None, help="write PREFIX_U.json and PREFIX_T.json")
    tol_opt(q)
    q.set_defaults(func=cmd_match)

    q = sub.add_parser("frobenius", help="triangular invariant-factor decomposition")
    q.add_argument("t0")
    tol_opt(q)
    q.set_defaults(func=cmd_frobenius)

    q = sub.add_parser("experiment", help="scale sweep with exponent fit")
    q.add_argument("--base", required=True)
    q.add_argument("--kind", choices=KINDS, required=True)
    q.add_argument("--scales", required=True, help="comma-separated positive scales")
    q.add_argument("--trials", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--out", default=None, help="report JSON path; a CSV is written next to it")
    tol_opt(q)
    q.set_defaults(func=cmd_experiment)

    q = sub.add_parser("repro", help="rerun a worked example")
    q.add_argument("name", choices=sorted(REPRODUCTIONS))
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_repro)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllConditionedStructureWarning)
            args.func(args)
    except GKSchurError as exc:
        print(f"gkschur: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"gkschur: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
