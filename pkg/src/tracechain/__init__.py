"""Markov chain approximation of reflected one-dimensional diffusions.

Given a scale function and a speed measure on [0, 1], this package builds
the nearest-neighbour continuous-time Markov chain induced on a grid (the
trace of the diffusion's Dirichlet form), solves its resolvents and
semigroups, simulates it exactly, and certifies numerically that the chain
approximations converge to the diffusion.
"""

__version__ = "0.1.0"

from .convergence import (
    ConvergenceRecord,
    ConvergenceReport,
    EnergyBoundReport,
    IdentityCheckReport,
    PiecewiseConstantFunction,
    adjoint_identities_check,
    convergence_sweep,
    corollary_energy_convergence,
    energy_upper_bound_check,
    extend,
    grid_inner,
    grid_norm,
    l2_distance_pc,
    l2_error,
    project,
    resolvent_convergence,
    restrict,
)
from .errors import (
    CheckFailed,
    ConfigError,
    DegenerateCellError,
    DomainError,
    ScaleDegeneracyError,
    TraceChainError,
    UnsupportedEnergyClass,
    ValidationError,
)
from .linalg import TridiagonalOperator, capacity, semigroup_apply, solve_shifted
from .reference import (
    CosineSeries,
    FineGridReference,
    fine_grid_reference,
    make_reference,
    rbm_resolvent,
    self_consistency_gap,
)
from .scale_speed import (
    CosineMode,
    IndicatorFunction,
    PiecewiseLinearFunction,
    PolynomialFunction,
    SAdaptedFunction,
    ScaleFunction,
    SpeedMeasure,
    TestFunction,
    build_fat_cantor_scale,
    continuous_energy,
    measure_interval,
    scale_eval,
)
from .simulate import (
    HittingSample,
    MonteCarloEstimate,
    PathSample,
    dynkin_martingale_residual,
    ensemble_hitting,
    ensemble_occupation,
    ensemble_states_at,
    first_hitting_time,
    holding_times_by_state,
    jump_direction_counts,
    occupation_fraction,
    path_to_csv,
    sample_at_times,
    simulate_path,
)
from .trace_chain import (
    ChainSpec,
    Partition,
    build_partition,
    build_trace_chain,
    cell_masses,
    dirichlet_energy,
    generator_matrix,
    harmonic_extension,
    hitting_prob_right,
    interpolation_energy,
)
