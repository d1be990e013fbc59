"""Adaptive probabilistic error cancellation under drifting noise.

Library layout:

  qsim     dense density-matrix simulation, counts, expectations
  noise    readout / CNOT-depolarizing channels and drift schedules
  circuit  layered Bernstein-Vazirani circuits and basis decorations
  pec      quasi-probability coefficients and mitigation estimators
  bayes    conjugate noise tracking and forward-map inversion
  harness  drift experiments, accuracy/stability metrics
  reports  counts-file format, report JSON/CSV, figure output
  cli      the `pecsim` command
"""

from .bayes import (
    BetaPosterior,
    DirichletPosterior,
    EstimatorState,
    ForwardMap,
    GridSpec,
    InversionResult,
    adaptive_update,
    beta_from_mean_var,
    beta_update,
    dirichlet_marginal_moments,
    dirichlet_update,
    fit_forward_map,
    init_estimator_state,
    invert_forward_map,
    pair_marginal_simulator,
)
from .circuit import (
    BasisCircuitIndex,
    CircuitSpec,
    all_exact_distributions,
    build_bv,
    decode_basis_index,
    decorate,
    encode_basis_index,
    exact_noisy_distribution,
    ideal_expectations,
    run_circuit,
)
from .errors import (
    CountsParseError,
    ModelMismatchError,
    PecSimError,
    SingularParameterError,
    UnrepresentableMomentsError,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    PriorSpec,
    accuracy_register,
    roem_correct,
    run_experiment,
    stability_register,
)
from .noise import (
    DriftSpec,
    NoiseParams,
    NoiseTrajectory,
    ParamDrift,
    cnot_depol_channel,
    cnot_depol_weights,
    drift_mean,
    realize_trajectory,
    sample_period_params,
    spam_channel,
)
from .pec import (
    CnotPec,
    PecEstimate,
    QuasiProbabilityDistribution,
    SpamPec,
    cnot_coeffs_closed_form,
    cnot_coeffs_numeric,
    cnot_coeffs_weight_ansatz,
    composite_qpd,
    full_sum_estimate,
    monte_carlo_estimate,
    spam_coeffs,
)
from .qsim import (
    CountsTable,
    DensityMatrix,
    KrausChannel,
    UnitaryGate,
    apply_kraus,
    apply_unitary,
    computational_distribution,
    pauli_matrix,
    qubit_expectation,
    sample_counts,
)
from .reports import CountsFile, load_counts, write_counts, write_report

__version__ = "0.1.0"
