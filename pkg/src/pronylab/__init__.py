"""Reconstruction of spike trains from moments via Prony systems.

Submodules: :mod:`core` (moment, Vieta and Hankel maps, solver),
:mod:`solvability`, :mod:`varieties` (Prony varieties and curves),
:mod:`error_geometry` (error sets of clustered signals) and
:mod:`applications`.
"""

from .applications import (
    ExponentialFit,
    Quadrature,
    WaringDecomposition,
    exponential_fit,
    gauss_quadrature_from_moments,
    waring_decompose,
)
from .core import (
    ComplexRootSet,
    ComplexSolution,
    MomentVector,
    MonicPolynomial,
    RankDeficient,
    RealSolution,
    SolveOutcome,
    SpikeSignal,
    Unsolvable,
    hankel_map,
    hankel_matrix,
    moments,
    pade_numerator,
    polynomial_roots,
    prony_solve,
    solve_many,
    vieta,
)
from .error_geometry import (
    ErrorScanReport,
    cluster_geometry,
    delta_q_concentration,
    moment_distance,
    normalize,
    pi_membership,
    sample_error_set,
    sandwich_check,
    scaling_experiment,
    worst_case_errors,
)
from .exceptions import (
    DegenerateCluster,
    GenericityFailure,
    HypothesisViolated,
    NearDegenerateVandermonde,
    NoFeasiblePoint,
    NonConvergence,
    NotRealSolvable,
    PronyError,
    SingularHankel,
    SolveFailed,
)
from .solvability import SolvabilityVerdict, is_hyperbolic, real_solvable, solvable
from .varieties import (
    PronyCurve,
    collision_diagnostics,
    curve_restricted_estimate,
    prony_curve,
    trace_curve,
    variety_linear_system,
)

__version__ = "0.1.0"
