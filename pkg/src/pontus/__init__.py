"""Relaxation speed-up protocols for an open two-level system.

The library propagates the affine Bloch equation under static, piecewise
constant, and damped-cosine rate schedules, extracts cutoff-based
relaxation times, classifies the resulting speed-ups, quantifies
non-Markovianity of the schedules, and sweeps the gain over parameter
planes.
"""

from .core import (
    TOL_BALL,
    AffineGenerator,
    BlochVector,
    FieldVector,
    ModulationInfo,
    ParameterPoint,
    RateTriple,
    Trajectory,
    trace_distance,
    validate_endpoint,
)
from .dynamics import (
    ConstantFlow,
    IntegratorConfig,
    assemble_generator,
    integrate,
    product_integration_oracle,
    propagate_constant,
    steady_state,
    superoperator_oracle,
    trajectory_to_csv,
    velocity,
    velocity_field_grid,
    velocity_field_to_csv,
)
from .errors import (
    BallViolation,
    ConfigError,
    DivergentIntervalCount,
    NegativeEndpointRate,
    NonFinite,
    NoSolution,
    NotConverged,
    PontusError,
    SingularGenerator,
    StepSizeUnderflow,
    ZeroDenominator,
)
from .mpemba import (
    ContinuousClass,
    GainValue,
    TwoStepClass,
    classify_continuous,
    classify_two_step,
    count_crossings,
    gain,
    relevant_crossings,
    two_step_distances,
)
from .nonmarkov import (
    CHANNELS,
    NmChannelReport,
    boundary_curve,
    channel_boundary_omega,
    channel_report,
    is_non_markovian,
    markov_boundary_alpha,
    negative_intervals,
    nm_measure_closed_form,
    nm_measure_quadrature,
)
from .protocols import (
    DEFAULT_EPS,
    ConstantSchedule,
    ExponentialCosineSchedule,
    PiecewiseTwoStepSchedule,
    ProtocolResult,
    RateSchedule,
    rate_at,
    relaxation_time,
    run_continuous,
    run_direct,
    run_two_step,
)
from .sweep import (
    GainMap,
    GridAxis,
    SweepSpec,
    gain_map_sidecar,
    gain_map_to_csv,
    sweep_kappa_omega,
    sweep_kappa_theta,
)

__version__ = "0.1.0"
