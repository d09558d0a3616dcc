"""Signature kernels for multivariate time series via a Goursat PDE solver.

The signature kernel — the inner product of two path signatures — solves a
linear second-order hyperbolic PDE in the two time variables.  This package
solves that PDE on dyadic refinements of the data grid (explicit or implicit
scheme, sequential or wavefront execution), validates it against a
brute-force truncated-signature oracle, and builds the surrounding tooling:
static-kernel lifts, Gram matrices, MMD estimators, kernel ridge regression,
sparse measure reduction, fBM sampling, a CLI, and an HTTP service.
"""

from .config import RunConfig
from .data import (
    TimeSeries,
    insert_midpoints,
    load_csv,
    rescale_max_abs,
    sample_fbm,
    scale,
    time_augment,
    write_csv,
)
from .errors import InputError, NumericalError, SigPdeError
from .gram import (
    GramMatrix,
    gram,
    krr_fit,
    krr_predict,
    mmd_squared,
    read_gram_csv,
    write_gram_csv,
)
from .oracle import (
    TruncatedTensor,
    chen_product,
    one_variation,
    segment_exponential,
    signature_inner,
    tail_bound,
    truncated_kernel,
    truncated_signature,
    unit_tensor,
)
from .reduction import (
    ReductionResult,
    WeightedEnsemble,
    as_probability,
    default_step,
    penalty_for_support,
    proximal_reduce,
    reduce_ensemble,
    reduction_gradient,
    reduction_loss,
    soft_threshold,
)
from .solver import (
    PdeSolution,
    analytic_linear_kernel,
    convergence_study,
    signature_pde_kernel,
    solve_explicit,
    solve_implicit,
)
from .static_kernels import (
    IncrementGrid,
    StaticKernel,
    lifted_increment_grid,
    raw_increment_grid,
)

__all__ = [
    "RunConfig",
    "TimeSeries",
    "insert_midpoints",
    "load_csv",
    "rescale_max_abs",
    "sample_fbm",
    "scale",
    "time_augment",
    "write_csv",
    "InputError",
    "NumericalError",
    "SigPdeError",
    "GramMatrix",
    "gram",
    "krr_fit",
    "krr_predict",
    "mmd_squared",
    "read_gram_csv",
    "write_gram_csv",
    "TruncatedTensor",
    "chen_product",
    "one_variation",
    "segment_exponential",
    "signature_inner",
    "tail_bound",
    "truncated_kernel",
    "truncated_signature",
    "unit_tensor",
    "ReductionResult",
    "WeightedEnsemble",
    "as_probability",
    "default_step",
    "penalty_for_support",
    "proximal_reduce",
    "reduce_ensemble",
    "reduction_gradient",
    "reduction_loss",
    "soft_threshold",
    "PdeSolution",
    "analytic_linear_kernel",
    "convergence_study",
    "signature_pde_kernel",
    "solve_explicit",
    "solve_implicit",
    "IncrementGrid",
    "StaticKernel",
    "lifted_increment_grid",
    "raw_increment_grid",
]
