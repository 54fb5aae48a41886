"""Command-line driver.

Subcommands: ``generate`` writes a correlated sequence to a directory,
``solve`` runs one iterative solve against a stored problem, ``experiment``
runs the full warm-start comparison, and ``angles`` reports eigenvector
deviation angles along a sequence.

Exit codes: 0 success, 2 partial convergence, 3 format error,
4 oracle mismatch.

``SPECTRAL_CHAIN_THREADS`` caps the BLAS thread count; it is applied
before numpy is imported, so it only takes effect when this module is the
process entry point.
"""

import os
import sys

if "SPECTRAL_CHAIN_THREADS" in os.environ and "numpy" not in sys.modules:
    _cap = os.environ["SPECTRAL_CHAIN_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _cap)

import argparse
import json

import numpy as np

from .chfsi import ChfsiConfig, chfsi_solve
from .harness import (
    ExperimentSpec,
    GenerateSource,
    LoadSource,
    OracleMismatchError,
    SOLVERS,
    emit_report,
    oracle_solve,
    run_experiment,
)
from .lobpcg import LobpcgConfig, lobpcg_solve, lobpcg_solve_generalized
from .pencil_io import FormatError, load_sequence, save_sequence
from .reduction import to_standard
from .sequence import CorrelationSchedule, angle_report, generate_sequence

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_FORMAT = 3
EXIT_ORACLE = 4


def _add_generation_flags(p):
    p.add_argument("--n", type=int, default=200, help="problem dimension")
    p.add_argument("--seq-len", type=int, default=12, help="number of problems")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cond-b", type=float, default=1e6, help="overlap condition target")
    p.add_argument("--eps0", type=float, default=0.5, help="first perturbation magnitude")
    p.add_argument("--eps-decay", type=float, default=0.45, help="geometric decay ratio")


def _add_solver_flags(p):
    p.add_argument("--solver", choices=SOLVERS, default="chfsi")
    p.add_argument("--nev", type=int, default=20, help="wanted lowest eigenpairs")
    p.add_argument("--blk", type=int, default=None, help="block width override")
    p.add_argument("--deg", type=int, default=None, help="filter degree override (chfsi)")
    p.add_argument("--tol", type=float, default=None, help="residual tolerance override")


def _schedule(args):
    return CorrelationSchedule.geometric(
        args.seq_len, eps0=args.eps0, decay=args.eps_decay, b_cond_target=args.cond_b
    )


def _overrides(args):
    out = {}
    if args.blk is not None:
        out["blk"] = args.blk
    if args.tol is not None:
        out["tol"] = args.tol
    if args.deg is not None and args.solver == "chfsi":
        out["deg"] = args.deg
    return out


def _cmd_generate(args):
    seq = generate_sequence(args.n, _schedule(args), seed=args.seed)
    save_sequence(seq, args.out)
    print(f"wrote {len(seq)} pencils of dimension {seq.n} to {args.out}")
    return EXIT_OK


def _cmd_solve(args):
    seq = load_sequence(args.input)
    if not 1 <= args.ell <= len(seq):
        raise FormatError(f"label {args.ell} outside sequence 1..{len(seq)}")
    pencil = seq.pencils[args.ell - 1]
    rng = np.random.default_rng(args.seed)
    if args.solver == "lobpcg-generalized":
        cfg = LobpcgConfig(nev=args.nev, **_overrides(args))
        sol, rep = lobpcg_solve_generalized(pencil.a, pencil.b, cfg, rng=rng,
                                            label=pencil.label)
    else:
        problem = to_standard(pencil)
        if args.solver == "chfsi":
            cfg = ChfsiConfig(nev=args.nev, **_overrides(args))
            sol, rep = chfsi_solve(problem.h, cfg, rng=rng, label=pencil.label)
        else:
            cfg = LobpcgConfig(nev=args.nev, **_overrides(args))
            sol, rep = lobpcg_solve(problem.h, cfg, rng=rng, label=pencil.label)
    payload = {
        "label": pencil.label,
        "solver": args.solver,
        "converged": rep.converged,
        "values": [float(v) for v in sol.values],
        "max_residual": float(rep.final_residuals.max(initial=0.0)),
        "inner_loops": rep.inner_loops,
        "matvecs": rep.matvecs,
        "filtered_vectors": rep.filtered_vectors,
        "wall_time_s": rep.wall_time,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if rep.converged else EXIT_PARTIAL


def _cmd_experiment(args):
    if args.input:
        source = LoadSource(directory=args.input)
    else:
        source = GenerateSource(n=args.n, schedule=_schedule(args), seed=args.seed)
    spec = ExperimentSpec(
        source=source,
        solver=args.solver,
        nev=args.nev,
        solver_overrides=_overrides(args),
        tracked_fraction=args.fraction,
        repetitions=args.reps,
        seed=args.seed,
    )
    report = run_experiment(spec)
    for message in report.warnings:
        print(f"warning: {message}", file=sys.stderr)
    if args.out:
        emit_report(report, args.format, args.out)
        print(f"wrote {len(report.rows)} comparison rows to {args.out}")
    else:
        for row in report.rows:
            print(
                f"ell {row.ell}: speedup_matvec {row.speedup_matvec:.2f} "
                f"speedup_time {row.speedup_time:.2f} "
                f"loops {row.inner_loops_random}->{row.inner_loops_approx} "
                f"median_angle {row.median_angle:.2e}"
            )
    return EXIT_OK if report.all_converged else EXIT_PARTIAL


def _cmd_angles(args):
    seq = load_sequence(args.input)
    solutions = [oracle_solve(p, args.nev)[0] for p in seq.pencils]
    rep = angle_report(seq, solutions, fraction=args.fraction)
    records = [
        {"ell": ell, "median_angle": rep.median_angles[ell]}
        for ell in sorted(rep.median_angles)
    ]
    if args.out:
        if args.format == "json":
            with open(args.out, "w") as fh:
                json.dump(records, fh, indent=2)
        else:
            import csv as _csv

            with open(args.out, "w", newline="") as fh:
                writer = _csv.DictWriter(fh, fieldnames=["ell", "median_angle"])
                writer.writeheader()
                writer.writerows(records)
        print(f"wrote {len(records)} angle rows to {args.out}")
    else:
        for rec in records:
            print(f"ell {rec['ell']}: median angle {rec['median_angle']:.3e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spectral-chain",
        description="Correlated Hermitian eigenproblem sequences: generation, "
        "iterative solvers and warm-start benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate and store a pencil sequence")
    _add_generation_flags(p)
    p.add_argument("--out", required=True, help="target sequence directory")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="solve one stored problem iteratively")
    p.add_argument("--in", dest="input", required=True, help="sequence directory")
    p.add_argument("--ell", type=int, default=1, help="problem label")
    p.add_argument("--seed", type=int, default=0)
    _add_solver_flags(p)
    p.add_argument("--out", default=None, help="write the JSON summary here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("experiment", help="run the warm-start comparison")
    p.add_argument("--in", dest="input", default=None, help="sequence directory (else generate)")
    _add_generation_flags(p)
    _add_solver_flags(p)
    p.add_argument("--reps", type=int, default=5, help="timing repetitions per cell")
    p.add_argument("--fraction", type=float, default=1.0, help="tracked fraction for angles")
    p.add_argument("--out", default=None, help="report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("angles", help="deviation angles along a stored sequence")
    p.add_argument("--in", dest="input", required=True, help="sequence directory")
    p.add_argument("--nev", type=int, default=20)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_angles)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OracleMismatchError as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
