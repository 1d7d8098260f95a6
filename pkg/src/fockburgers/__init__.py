"""Spectral Fock-space numerics for the stochastic Burgers generator."""

__version__ = "0.1.0"

from .fock import (
    ChaosKernel,
    FockVector,
    ModeRangeError,
    NumberWeight,
    SpectralField,
    ZeroModeError,
    dyadic_weights,
    evaluate,
    fock_vector,
    geometric_weight,
    inner_product,
    kernel_from_json,
    kernel_to_json,
    make_kernel,
    poly_weight,
    realify,
    sample_white_noise,
    symmetric_kernel,
    spectral_field,
    unit_weight,
    weighted_norm,
    zero_vector,
)
from .operators import (
    CutoffLaw,
    FockBasis,
    GeneratorParams,
    TrilinearityError,
    apply_drift,
    apply_drift_lower,
    apply_drift_raise,
    apply_fractional_dissipation,
    apply_generator_full,
    apply_laplacian_power,
    burgers_drift,
    operator_matrix,
    split_drift,
    sum_estimate_probe,
    validate_trilinear,
)
from .backward import (
    BackwardTrajectory,
    StepSizeError,
    apriori_report,
    ergodic_decay,
    remainder_dynamics,
    smoothing_probe,
    solve_backward,
    step_backward,
)
from .controlled import (
    ControlledPair,
    NonContractionError,
    adapted_gain_probe,
    apply_generator,
    approx_in_domain,
    choose_cutoff_level,
    estimate_contraction,
    remainder,
    solve_controlled,
)
from .sim import (
    MartingaleReport,
    TrajectoryBatch,
    energy_identity_check,
    hypercontractivity_check,
    invariance_test,
    ito_trick_probe,
    martingale_test,
    multicomponent_simulate,
    qv_estimate,
    simulate,
)
from .streams import stream
