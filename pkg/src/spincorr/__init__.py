"""Numerics for lattice spin systems with a finite spin space.

The package builds transition energy fields from pair potentials, checks
the algebraic identities those fields must satisfy, enumerates exact
finite-volume correlation functions, solves the correlation fixed-point
equation by contraction iteration, and quantifies how fast window
correlation values approach their large-volume limit.
"""

from .errors import (
    BudgetExceededError,
    DomainError,
    EnvironmentConditionError,
    GateNotCertifiedError,
    ModelDefinitionError,
    ModelFileError,
    SolverDivergenceError,
    SpincorrError,
)
from .lattice import (
    Configuration,
    EMPTY_CONFIG,
    SpinSpace,
    ball,
    box,
    chebyshev_distance,
    concat,
    distance_to_complement,
    enumerate_configs,
    interior,
    set_distance,
    split_min,
)
from .fields import (
    DecaySums,
    FieldBounds,
    OnePointField,
    PairField,
    PairPotential,
    PerturbedField,
    TripleInteractionField,
    ZeroField,
    decay_sums,
    delta_volume,
    field_bounds,
    norm_delta1,
    pair_potential_field,
    pair_potential_norm,
    remark1_sufficiency,
)
from .checks import (
    CheckReport,
    check_environment_condition,
    check_field_consistency,
    check_one_point_consistency,
)
from .exact import (
    CorrelationTable,
    GibbsTable,
    gibbs_distribution,
    partition_function,
    read_table,
    rho_exact,
    rho_probe,
    verify_correlation_equation,
    write_table,
)
from .modelfile import Model, load_model, model_digest, parse_model
from .solver import (
    ConvergencePoint,
    ConvergenceSeries,
    KernelTruncation,
    NormCertificate,
    SolveReport,
    SupportedFunction,
    apply_G,
    apply_K,
    bstar_norm,
    convergence_profile,
    delta_fn,
    epsilon_bound,
    gamma,
    kernel,
    operator_norm_certificate,
    solve_finite_volume,
    solve_infinite_volume,
    tail_f_bound,
    write_series,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "CheckReport",
    "Configuration",
    "ConvergencePoint",
    "ConvergenceSeries",
    "CorrelationTable",
    "DecaySums",
    "DomainError",
    "EMPTY_CONFIG",
    "EnvironmentConditionError",
    "FieldBounds",
    "GateNotCertifiedError",
    "GibbsTable",
    "KernelTruncation",
    "Model",
    "ModelDefinitionError",
    "ModelFileError",
    "NormCertificate",
    "OnePointField",
    "PairField",
    "PairPotential",
    "PerturbedField",
    "SolveReport",
    "SolverDivergenceError",
    "SpinSpace",
    "SpincorrError",
    "SupportedFunction",
    "TripleInteractionField",
    "ZeroField",
    "apply_G",
    "apply_K",
    "ball",
    "box",
    "bstar_norm",
    "chebyshev_distance",
    "check_environment_condition",
    "check_field_consistency",
    "check_one_point_consistency",
    "concat",
    "convergence_profile",
    "decay_sums",
    "delta_fn",
    "delta_volume",
    "distance_to_complement",
    "enumerate_configs",
    "epsilon_bound",
    "field_bounds",
    "gamma",
    "gibbs_distribution",
    "interior",
    "kernel",
    "load_model",
    "model_digest",
    "norm_delta1",
    "operator_norm_certificate",
    "pair_potential_field",
    "pair_potential_norm",
    "parse_model",
    "partition_function",
    "read_table",
    "remark1_sufficiency",
    "rho_exact",
    "rho_probe",
    "set_distance",
    "solve_finite_volume",
    "solve_infinite_volume",
    "split_min",
    "tail_f_bound",
    "verify_correlation_equation",
    "write_series",
    "write_table",
]
