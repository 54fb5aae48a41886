"""Warm-start benchmark harness.

For every adjacent pair of problems in a sequence the experiment
1. solves problem ``l`` with the dense direct solver, keeping the lowest
   ``blk`` eigenvectors and the eigenvalues framing the filter window,
2. solves problem ``l+1`` iteratively from random starting vectors,
3. solves problem ``l+1`` iteratively from the stored vectors,
4. reports the speed-up, both in wall time (median over repetitions) and
   in single-column operator applications, which is hardware-independent.

Every iterative result is cross-checked against the direct solver; a
mismatch aborts the experiment.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .chfsi import ChfsiConfig, ChfsiGuess, chfsi_solve
from .lobpcg import LobpcgConfig, lobpcg_solve, lobpcg_solve_generalized
from .linalg import hermitian_eig
from .pencil_io import load_sequence
from .reduction import EigenSolution, back_transform, to_standard
from .sequence import CorrelationSchedule, generate_sequence, match_eigenvectors

__all__ = [
    "GenerateSource",
    "LoadSource",
    "ExperimentSpec",
    "ExperimentRow",
    "ExperimentReport",
    "OracleMismatchError",
    "SOLVERS",
    "oracle_solve",
    "run_experiment",
    "emit_report",
]

SOLVERS = ("chfsi", "lobpcg", "lobpcg-generalized")

# iterative eigenvalues must match the direct solver to this tolerance,
# absolute on the unit-scaled spectrum
_ORACLE_TOL = 1e-8

# CSV schema; JSON rows mirror these fields verbatim
REPORT_FIELDS = [
    "ell",
    "t_random_s",
    "t_approx_s",
    "speedup_time",
    "matvecs_random",
    "matvecs_approx",
    "speedup_matvec",
    "filtered_random",
    "filtered_approx",
    "inner_loops_random",
    "inner_loops_approx",
    "median_angle",
]


class OracleMismatchError(RuntimeError):
    """An iterative solve disagreed with the direct solver."""


@dataclass
class GenerateSource:
    """Generate the sequence on the fly."""

    n: int
    schedule: CorrelationSchedule
    seed: int = 0


@dataclass
class LoadSource:
    """Load a sequence directory produced by :func:`save_sequence`."""

    directory: str


@dataclass
class ExperimentSpec:
    source: GenerateSource | LoadSource
    solver: str
    nev: int
    solver_overrides: dict = field(default_factory=dict)
    tracked_fraction: float = 1.0
    repetitions: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}, expected one of {SOLVERS}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 0 < self.tracked_fraction <= 1:
            raise ValueError("tracked_fraction must be in (0, 1]")
        if self.nev < 1:
            raise ValueError("nev must be >= 1")


@dataclass
class ExperimentRow:
    """Comparison cell for one solved problem (labels 2..N)."""

    ell: int
    t_random_s: float
    t_approx_s: float
    speedup_time: float
    matvecs_random: int
    matvecs_approx: int
    speedup_matvec: float
    filtered_random: int
    filtered_approx: int
    inner_loops_random: int
    inner_loops_approx: int
    median_angle: float
    max_residual_random: float
    max_residual_approx: float
    converged_random: bool
    converged_approx: bool


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow]
    n: int
    length: int
    solver: str
    nev: int
    blk: int
    repetitions: int
    tracked_fraction: float
    seed: int
    warnings: list[str] = field(default_factory=list)

    @property
    def all_converged(self):
        return all(r.converged_random and r.converged_approx for r in self.rows)


def oracle_solve(pencil, nev):
    """Direct (dense) solution of a pencil: the reference every iterative
    result is held against.

    Returns the standard-form solution restricted to ``nev`` pairs, the
    reduced problem, and the full ascending spectrum.
    """
    sp = to_standard(pencil)
    values, vectors = hermitian_eig(sp.h)
    sol = EigenSolution(
        values=values[:nev], vectors=vectors[:, :nev], form="standard", label=pencil.label
    )
    return sol, sp, values


def _resolve_sequence(spec):
    if isinstance(spec.source, GenerateSource):
        return generate_sequence(spec.source.n, spec.source.schedule, seed=spec.source.seed)
    return load_sequence(spec.source.directory)


def _make_config(spec, n):
    if spec.solver == "chfsi":
        cfg = ChfsiConfig(nev=spec.nev, **spec.solver_overrides)
    else:
        cfg = LobpcgConfig(nev=spec.nev, **spec.solver_overrides)
    blk = cfg.resolve(n)[0]
    return cfg, blk


def _check_oracle(values, oracle_values, scale, label, start):
    err = float(np.abs(values - oracle_values[: values.size]).max())
    if err > _ORACLE_TOL * scale:
        raise OracleMismatchError(
            f"problem {label} ({start} start): eigenvalue error {err:.3e} exceeds "
            f"{_ORACLE_TOL:.0e} on spectrum scale {scale:.3e}"
        )


def run_experiment(spec):
    """Run the four-stage warm-start experiment over a whole sequence."""
    seq = _resolve_sequence(spec)
    n = seq.n
    cfg, blk = _make_config(spec, n)
    warnings = []
    report = ExperimentReport(
        rows=[],
        n=n,
        length=len(seq),
        solver=spec.solver,
        nev=spec.nev,
        blk=blk,
        repetitions=spec.repetitions,
        tracked_fraction=spec.tracked_fraction,
        seed=spec.seed,
    )
    if len(seq) < 2:
        warnings.append("sequence has a single problem; nothing to compare")
        report.warnings = warnings
        return report
    if spec.solver == "chfsi" and blk >= n:
        raise ValueError(
            f"chfsi warm starts need blk < n for the window eigenvalue (blk={blk}, n={n})"
        )
    generalized = spec.solver == "lobpcg-generalized"
    tracked = max(1, int(np.ceil(spec.tracked_fraction * spec.nev)))

    def solve_cell(problem, pencil, guess, cell_seed):
        """Median wall time over repetitions; counts are seed-deterministic."""
        times = []
        solution = rep = None
        for _ in range(spec.repetitions):
            rng = np.random.default_rng(cell_seed)
            if spec.solver == "chfsi":
                solution, rep = chfsi_solve(problem.h, cfg, guess=guess, rng=rng,
                                            label=pencil.label)
            elif spec.solver == "lobpcg":
                solution, rep = lobpcg_solve(problem.h, cfg, guess=guess, rng=rng,
                                             label=pencil.label)
            else:
                solution, rep = lobpcg_solve_generalized(pencil.a, pencil.b, cfg,
                                                         guess=guess, rng=rng,
                                                         label=pencil.label)
            times.append(rep.wall_time)
        return solution, rep, statistics.median(times)

    prev_oracle = oracle_solve(seq.pencils[0], max(blk + 1, spec.nev))
    for idx in range(1, len(seq)):
        pencil = seq.pencils[idx]
        sol_prev, sp_prev, vals_prev = prev_oracle
        sol_now, sp_now, vals_now = oracle_solve(pencil, max(blk + 1, spec.nev))
        scale = float(max(abs(vals_now[0]), abs(vals_now[-1]), 1e-300))

        if spec.solver == "chfsi":
            guess = ChfsiGuess(
                vectors=sol_prev.vectors[:, :blk],
                lambda1=float(vals_prev[0]),
                lambda_blk_plus_1=float(vals_prev[blk]),
            )
        elif spec.solver == "lobpcg":
            guess = sol_prev.vectors[:, :blk]
        else:
            guess = back_transform(sp_prev.cholesky_factor, sol_prev).vectors[:, :blk]

        problem = sp_now
        sol_r, rep_r, t_r = solve_cell(problem, pencil, None, (spec.seed, pencil.label, 0))
        sol_a, rep_a, t_a = solve_cell(problem, pencil, guess, (spec.seed, pencil.label, 1))

        for rep, sol, start in ((rep_r, sol_r, "random"), (rep_a, sol_a, "approximate")):
            if rep.converged:
                _check_oracle(sol.values, vals_now, scale, pencil.label, start)
            else:
                warnings.append(f"problem {pencil.label}: {start} start did not converge")

        sigma, theta = match_eigenvectors(
            replace_tracked(sol_prev, tracked), None, replace_tracked(sol_now, tracked), None
        )
        report.rows.append(
            ExperimentRow(
                ell=pencil.label,
                t_random_s=t_r,
                t_approx_s=t_a,
                speedup_time=t_r / t_a if t_a > 0 else float("inf"),
                matvecs_random=rep_r.matvecs,
                matvecs_approx=rep_a.matvecs,
                speedup_matvec=rep_r.matvecs / rep_a.matvecs if rep_a.matvecs else float("inf"),
                filtered_random=rep_r.filtered_vectors,
                filtered_approx=rep_a.filtered_vectors,
                inner_loops_random=rep_r.inner_loops,
                inner_loops_approx=rep_a.inner_loops,
                median_angle=float(np.median(theta)),
                max_residual_random=float(rep_r.final_residuals.max(initial=0.0)),
                max_residual_approx=float(rep_a.final_residuals.max(initial=0.0)),
                converged_random=rep_r.converged,
                converged_approx=rep_a.converged,
            )
        )
        prev_oracle = (sol_now, sp_now, vals_now)

    report.warnings = warnings
    return report


def replace_tracked(sol, count):
    """Restrict a solution to its lowest ``count`` pairs."""
    count = min(count, sol.nev)
    return replace(sol, values=sol.values[:count], vectors=sol.vectors[:, :count])


def _row_record(row):
    return {
        "ell": row.ell,
        "t_random_s": row.t_random_s,
        "t_approx_s": row.t_approx_s,
        "speedup_time": row.speedup_time,
        "matvecs_random": row.matvecs_random,
        "matvecs_approx": row.matvecs_approx,
        "speedup_matvec": row.speedup_matvec,
        "filtered_random": row.filtered_random,
        "filtered_approx": row.filtered_approx,
        "inner_loops_random": row.inner_loops_random,
        "inner_loops_approx": row.inner_loops_approx,
        "median_angle": row.median_angle,
    }


def emit_report(report, fmt, path):
    """Serialize the comparison rows as CSV or JSON.

    The CSV columns are exactly ``REPORT_FIELDS``; the JSON document is a
    list of row objects carrying the same fields.
    """
    path = Path(path)
    records = [_row_record(r) for r in report.rows]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
            writer.writeheader()
            writer.writerows(records)
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(records, fh, indent=2)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
