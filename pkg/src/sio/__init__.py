"""截断奇异积分算子模块."""

from .experiments import (
    SeriesResult,
    SeriesRow,
    cantor_row_sup_sweep,
    koch_stagewise_form,
    l1_divergence_scan,
)
from .operators import (
    KernelMatrix,
    QuadFormResult,
    kernel_matrix,
    l2_norm_estimate,
    local_quadratic_form,
    norm_profile,
    quadratic_form,
    row_sums,
    row_sup,
    symmetrized_row_sup,
)

__all__ = [
    "KernelMatrix",
    "QuadFormResult",
    "SeriesResult",
    "SeriesRow",
    "kernel_matrix",
    "quadratic_form",
    "local_quadratic_form",
    "row_sums",
    "row_sup",
    "symmetrized_row_sup",
    "l2_norm_estimate",
    "norm_profile",
    "l1_divergence_scan",
    "koch_stagewise_form",
    "cantor_row_sup_sweep",
]
