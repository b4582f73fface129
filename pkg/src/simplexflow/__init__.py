"""Flows on the phase space of the probability simplex.

Information-geometry tensors on the positive cone, Hamiltonian vector fields
and symplectic integration in real coordinates, the complex chart with exact
unitary propagation, and diagnostics that verify which flows preserve which
structures.
"""

from ._version import __version__
from .diagnostics import (
    DEFAULT_PARAM_FAMILIES,
    FS_RATIO_CONSTANT,
    CheckResult,
    DiagnosticsReport,
    FlowClassification,
    FsRatios,
    ab_independence_sweep,
    classify_flow,
    convergence_study,
    fs_consistency,
    lie_derivative,
    lie_derivative_metric,
    lie_derivative_symplectic,
    random_hermitian,
    sample_interior_points,
)
from .errors import (
    BoundaryError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    NormalizationError,
    NotHermitianError,
    NotRealError,
    ParamError,
    SimplexFlowError,
    SingularError,
)
from .flows import (
    HamiltonianSpec,
    PhasePoint,
    TangentVector,
    Trajectory,
    bracket_from_gradients,
    check_normalization_generator,
    circle_difference,
    eval_hamiltonian,
    gauge_canonicalize,
    gradient,
    hamiltonian_vector_field,
    integrate_midpoint,
    poisson_bracket,
)
from .geometry import (
    CANONICAL_PARAMS,
    EPS_FLOOR,
    ComplexStructure,
    InfoMetric,
    MetricParams,
    PhaseSpaceMetric,
    SymplecticMatrix,
    complex_structure,
    embedding_length,
    induced_metric_ts,
    info_metric,
    phase_space_metric,
    symplectic_eval,
    symplectic_matrix,
)
from .hilbert import (
    ComplexState,
    HermitianOperator,
    commutator_identity_check,
    from_complex,
    inner_product,
    propagate_unitary,
    psi_tensors,
    superposition,
    to_complex,
)
from .scenario import (
    ScenarioConfig,
    ScenarioResult,
    config_from_dict,
    emit_report,
    run_scenario,
    validate_config,
    write_trajectory_csv,
)

__all__ = [
    "__version__",
    # errors
    "SimplexFlowError", "BoundaryError", "ParamError", "SingularError",
    "DimensionError", "NormalizationError", "NotRealError", "NotHermitianError",
    "ConvergenceError", "ConfigError",
    # geometry
    "EPS_FLOOR", "MetricParams", "CANONICAL_PARAMS", "InfoMetric",
    "PhaseSpaceMetric", "SymplecticMatrix", "ComplexStructure", "info_metric",
    "phase_space_metric", "symplectic_matrix", "symplectic_eval",
    "complex_structure", "embedding_length", "induced_metric_ts",
    # flows
    "PhasePoint", "TangentVector", "HamiltonianSpec", "Trajectory",
    "circle_difference", "eval_hamiltonian", "gradient",
    "hamiltonian_vector_field", "bracket_from_gradients", "poisson_bracket",
    "check_normalization_generator", "integrate_midpoint", "gauge_canonicalize",
    # hilbert
    "ComplexState", "HermitianOperator", "to_complex", "from_complex",
    "inner_product", "propagate_unitary", "commutator_identity_check",
    "superposition", "psi_tensors",
    # diagnostics
    "FlowClassification", "CheckResult", "DiagnosticsReport", "FsRatios",
    "FS_RATIO_CONSTANT", "DEFAULT_PARAM_FAMILIES", "sample_interior_points",
    "random_hermitian", "lie_derivative", "lie_derivative_metric",
    "lie_derivative_symplectic", "classify_flow", "fs_consistency",
    "ab_independence_sweep", "convergence_study",
    # scenario
    "ScenarioConfig", "ScenarioResult", "config_from_dict", "validate_config",
    "run_scenario", "emit_report", "write_trajectory_csv",
]
