"""Integrable operators, their jump problem, and the canonical system.

The pipeline: a signature matrix J and a matrix weight F1 on an interval
define a principal-value integral operator S.  Solving S Phi = F1 row by
row yields F2 and the density F = F2* F1, whose Cauchy transform W solves
a multiplicative jump problem on the interval.  Accumulating Phi* F1 in
the right endpoint recovers the positive Hamiltonian H, the accumulation
matrix B, and the first moment M1 of a canonical differential system
whose transport from one endpoint to the other reproduces W.
"""

from .canonical import (
    CanonicalData,
    accumulate_B,
    asymptotic_coefficients,
    exact_moments,
    first_moment,
    hamiltonian,
    integrate_system,
    monodromy_residual,
    monotonicity_defect,
    recover,
    vanishing_support_check,
)
from .core import (
    Interval,
    QuadratureGrid,
    SampledMatrixFunction,
    check_signature,
    gauss_legendre_grid,
    principal_sqrt_psd,
)
from .errors import (
    DegenerateWeightError,
    EndpointSingularityError,
    IllConditionedError,
    InconsistentHamiltonianError,
    InvalidArgumentError,
    InvalidJModuleError,
    NotPSDError,
    OdeDivergenceError,
    OnCutError,
    PVDiagonalError,
    RHCanError,
    ShapeMismatchError,
    SingularJModuleError,
)
from .examples import (
    EXAMPLES,
    airy_spec,
    bessel_spec,
    build_example,
    jmodule_field_from_spec,
    jump_matrix_squared,
    operator_matrix_from_jmodule,
    psi_spec,
    rank_one_spec,
    sine_gamma_spec,
    sine_spec,
    unitary_phi_spec,
    windowed_spec,
)
from .intop import (
    DiscretizedOperator,
    KernelSpec,
    build_nystrom,
    build_nystrom_from_samples,
    compute_F2,
    interpolate_solution,
    kernel_value,
    make_kernel_spec,
    scalar_weight,
    solve_phi,
)
from .jmodule import (
    DefectFactor,
    JModuleField,
    check_unipotent_class,
    defect_matrix,
    factor_defect,
    unipotent_residual,
)
from .rh import (
    RHSolution,
    boundary_values,
    cauchy_eval,
    interpolate_density,
    j_property_residuals,
    jump_residual,
    mean_value_residual,
    normalization_residual,
    solve_problem,
)

__version__ = "0.1.0"

__all__ = [
    "CanonicalData",
    "DefectFactor",
    "DegenerateWeightError",
    "DiscretizedOperator",
    "EXAMPLES",
    "EndpointSingularityError",
    "IllConditionedError",
    "InconsistentHamiltonianError",
    "Interval",
    "InvalidArgumentError",
    "InvalidJModuleError",
    "JModuleField",
    "KernelSpec",
    "NotPSDError",
    "OdeDivergenceError",
    "OnCutError",
    "PVDiagonalError",
    "QuadratureGrid",
    "RHCanError",
    "RHSolution",
    "SampledMatrixFunction",
    "ShapeMismatchError",
    "SingularJModuleError",
    "accumulate_B",
    "airy_spec",
    "asymptotic_coefficients",
    "bessel_spec",
    "boundary_values",
    "build_example",
    "build_nystrom",
    "build_nystrom_from_samples",
    "cauchy_eval",
    "check_signature",
    "check_unipotent_class",
    "compute_F2",
    "defect_matrix",
    "exact_moments",
    "factor_defect",
    "first_moment",
    "gauss_legendre_grid",
    "hamiltonian",
    "integrate_system",
    "interpolate_density",
    "interpolate_solution",
    "j_property_residuals",
    "jmodule_field_from_spec",
    "jump_matrix_squared",
    "jump_residual",
    "kernel_value",
    "make_kernel_spec",
    "mean_value_residual",
    "monodromy_residual",
    "monotonicity_defect",
    "normalization_residual",
    "operator_matrix_from_jmodule",
    "principal_sqrt_psd",
    "psi_spec",
    "rank_one_spec",
    "recover",
    "scalar_weight",
    "sine_gamma_spec",
    "sine_spec",
    "solve_phi",
    "solve_problem",
    "unipotent_residual",
    "unitary_phi_spec",
    "vanishing_support_check",
    "windowed_spec",
]
