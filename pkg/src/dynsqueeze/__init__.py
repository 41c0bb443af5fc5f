"""Gaussian-optics simulator of a measurement-based dynamic squeezing gate.

The gate shears phase space (x -> x, p -> p + kappa x) using only a squeezed
ancilla, a balanced beamsplitter, a phase-tracked homodyne measurement and an
electronic feed-forward displacement; kappa can follow a control waveform in
time.  The package models the Gaussian quantum optics, the analog feed-forward
electronics, a repeated-shot measurement harness and the variance analysis.
"""

from .analysis import (
    Residuals,
    VarianceSummary,
    diagonalize,
    is_positive_definite,
    reconstruct_variance_matrix,
    scan_extrema,
    summarize,
)
from .config import ConfigError, RunConfig, config_digest, load_config, save_config
from .electronics import (
    DelayModel,
    PiecewiseLinearFunction,
    SignalChainStage,
    apply_chain,
    delay_signal,
    eval_pwl,
    fit_pwl,
    load_pwl_table,
    max_error,
    save_pwl_table,
)
from .gate import (
    GateCalibrationError,
    GateParams,
    ShearDecomposition,
    SignConventions,
    calibrate_signs,
    closed_form_output,
    decompose_shear,
    gate_output_state,
    ideal_shear_map,
    simulate_gate_shot,
)
from .harness import (
    MEASUREMENT_ANGLES,
    ControlSignal,
    HomodyneRecordSet,
    InputModulation,
    MomentEstimates,
    TheoryTraces,
    estimate_moments,
    generate_traces,
    run_experiment,
    run_output_states,
    theory_traces,
)
from .homodyne import HomodyneOutcome, homodyne_measure, pure_loss
from .states import (
    GaussianState,
    db_to_variance,
    make_coherent,
    make_squeezed_vacuum,
    make_vacuum,
    quadrature_mean,
    quadrature_variance,
    symplectic_eigenvalues,
    symplectic_form,
    tensor,
    variance_to_db,
)
from .symplectic import (
    SymplecticTransform,
    apply,
    beamsplitter,
    compose,
    displace,
    embed,
    rotation,
    shear,
    squeeze,
)

__version__ = "0.1.0"
