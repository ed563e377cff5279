"""QMC worst-case errors in gamma-weighted ANOVA spaces and L_p* discrepancies."""

from ._cells import QuadratureBudgetError
from .bounds import (
    Sandwich,
    embedding_norm_1d_p2,
    g_norm_bound,
    sandwich_2d,
    t_inequality_holds,
    t_sequence,
    tilde_product_weights,
    tilde_weights,
    upper_bound_cor1,
)
from .core import (
    METHODS,
    ErrorReport,
    PointSet,
    PStar,
    SubsetId,
    Weights,
    all_subsets,
    condition9_holds,
    conjugate_exponent,
    full_mask,
    project,
    submasks,
)
from .discrepancy import (
    anchored_wce,
    l2_discrepancy,
    linf_discrepancy,
    local_discrepancy,
    lp_discrepancy,
    weighted_lp_discrepancy,
)
from .oracle import (
    discrepancy_integral_oracle,
    kernel_integral_oracle,
    one_point_per_interval_check,
    optimality_search_1d,
    quadrature_oracle,
)
from .pointsets import (
    balanced_sigma,
    format_pointset,
    format_weights,
    hammersley_2d,
    is_projection_regular,
    midpoint_1d,
    parse_pointset,
    parse_weights,
    random_pointset,
    read_pointset,
    read_weights,
    write_pointset,
)
from .wce import kappa2, kernel, kernel_sum, kernel_sum_via_discrepancy, wce

__version__ = "0.1.0"
