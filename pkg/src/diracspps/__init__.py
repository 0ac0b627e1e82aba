"""Power-series solver for 2x2 first-order spectral problems.

Solutions of ``B Y' + P(x) Y = lambda R(x) Y`` are represented as power
series in the spectral parameter whose coefficient functions come from a
simple recursive integration process seeded by a zero-free solution of the
homogeneous system.  The package covers initial value problems, eigenvalue
problems via truncated characteristic polynomials, spectral shifting for
large index ranges, reduction of general 2x2 first-order systems, and
Sturm-Liouville problems through an equivalent first-order reformulation.
"""

from .errors import (
    DegeneratePolynomial,
    DivisionByZeroNode,
    EvalError,
    InvalidSeed,
    MeshMismatch,
    NonVanishingNotFound,
    ParseError,
    SamplingError,
    SchemaError,
    SingularCoefficient,
    SingularInitialMatrix,
    SppsError,
    StepSizeTooCoarse,
    SweepStalled,
    TruncationWarning,
)
from .grid import GridFn, Mesh, integrate_cumulative, round_up_points, sample
from .homogeneous import (
    ParticularSolution,
    homogeneous_basis,
    particular_solution,
    solve_nonhomogeneous,
)
from .oracle import OracleSolution, dirac_matrix, general_matrix, integrate_linear_system
from .powers import (
    BoundConstants,
    FormalPowerTable,
    bound_constants,
    compute_formal_powers,
    empirical_radius,
    suggest_truncation,
    truncation_bound,
)
from .spectral import (
    AffineCoefficient,
    BoundaryConditions,
    CharPolynomial,
    EigenvalueRecord,
    SpectrumResult,
    SweepOptions,
    characteristic_polynomial,
    filter_spurious,
    find_roots,
    sweep_spectrum,
)
from .spps import (
    SppsSolutionPair,
    evaluate_solutions,
    shift_center,
    solution_pair,
    solve_ivp,
)
from .sturm import (
    DiracEquivalent,
    SLFormalPowers,
    SturmLiouvilleProblem,
    sl_formal_powers,
    sl_particular_solution,
    sl_spps_solution,
    sl_to_dirac,
)
from .system import (
    DiracSystem,
    GaugeWeight,
    GeneralLinearSystem,
    Mat2Fn,
    check_trace_condition,
    reduce_general,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
