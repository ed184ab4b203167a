"""Randomized Douglas-Rachford solvers for consistent linear systems.

The library implements the reflect-reflect-average family with i.i.d.,
without-replacement and volume pair sampling, fixed and adaptive heavy-ball
momentum, the associated theoretical contraction factors, problem
generators, and a benchmark CLI (``rdrsolve``).
"""

from .errors import (
    BadShape,
    DegenerateMatrix,
    DegenerateStep,
    InconsistentSystem,
    NotSymmetric,
    ParseError,
    RdrSolveError,
    StalledAtNonSolution,
    UnsupportedField,
    ZeroRow,
)
from .linalg import (
    RowGeometry,
    SpectralSummary,
    is_positive_definite,
    min_norm_solution,
    reference_solution,
    row_geometry,
    spectral_summary,
)
from .problems import (
    LinearProblem,
    gen_spectral,
    gen_uniform,
    load_matrix_market,
    make_consistent,
    spectral_problem,
    uniform_problem,
    write_matrix_market,
)
from .sampling import (
    IID,
    VOLUME,
    WITHOUT_REPLACEMENT,
    PairSampler,
    SeededRng,
    build_sampler,
)
from .solvers import (
    METHODS,
    SolveOptions,
    SolveResult,
    active_backend,
    amprdr_params,
    amprdr_step,
    double_reflect,
    have_compiled_backend,
    mrdr_step,
    prdr_step,
    project_hyperplane,
    reflect_hyperplane,
    solve,
)
from .theory import (
    RateReport,
    StepDiagnostics,
    build_M,
    build_N,
    expected_double_reflection,
    rate_prdr,
    rate_rdr,
    rate_report,
    step_diagnostics,
)

__version__ = "0.1.0"
