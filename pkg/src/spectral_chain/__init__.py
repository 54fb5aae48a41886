"""Block iterative eigensolvers for sequences of correlated dense
Hermitian generalized eigenproblems.

The package covers the full pipeline: dense kernels and a direct
reference eigensolver (:mod:`~spectral_chain.linalg`), Cholesky reduction
of pencils to standard form (:mod:`~spectral_chain.reduction`), Chebyshev
filtered subspace iteration with locking (:mod:`~spectral_chain.chfsi`),
an unpreconditioned block LOBPCG (:mod:`~spectral_chain.lobpcg`),
correlated sequence generation plus eigenvector-angle analysis
(:mod:`~spectral_chain.sequence`), and a warm-start benchmark harness
with Matrix Market persistence (:mod:`~spectral_chain.harness`,
:mod:`~spectral_chain.pencil_io`).
"""

from .linalg import (
    EigenSolverError,
    NotHermitianError,
    NotPositiveDefiniteError,
    RankDeficientError,
    cholesky,
    gemm,
    hermitian_eig,
    hermitian_view,
    qr_orthonormalize,
    triangular_solve,
)
from .reduction import (
    EigenPencil,
    EigenSolution,
    StandardProblem,
    back_transform,
    forward_transform,
    residual,
    to_standard,
)
from .chfsi import (
    ChfsiConfig,
    ChfsiGuess,
    FilterWindow,
    SolveReport,
    chebyshev_filter,
    chebyshev_response,
    chfsi_solve,
    lanczos_upper_bound,
    rayleigh_ritz,
)
from .lobpcg import (
    IllConditionedBasisError,
    LobpcgConfig,
    lobpcg_solve,
    lobpcg_solve_generalized,
)
from .sequence import (
    AngleReport,
    CorrelationSchedule,
    PencilSequence,
    angle_report,
    generate_sequence,
    match_eigenvectors,
)
from .pencil_io import (
    FormatError,
    load_sequence,
    read_pencil,
    save_sequence,
    write_pencil,
)
from .harness import (
    ExperimentReport,
    ExperimentRow,
    ExperimentSpec,
    GenerateSource,
    LoadSource,
    OracleMismatchError,
    emit_report,
    oracle_solve,
    run_experiment,
)

__version__ = "0.1.0"
