"""Averaged fixed-point iteration toolkit.

Certify displacement-based contraction constants empirically, run the
averaged iteration with computable error bounds as first-class monitored
quantities, and apply the machinery to split feasibility and variational
inequality problems through exact convex projections.
"""

from .apps import (
    SfpInstance,
    SfpOperator,
    SfpResult,
    VipInstance,
    VipOperator,
    VipResult,
    power_iteration,
    sfp_operator,
    solve_sfp,
    solve_vip,
    spectral_radius_ata,
    vip_operator,
)
from .certify import (
    ContractionCertificate,
    SampleSet,
    check_banach,
    check_enriched_bianchini,
    check_enriched_kannan,
    check_monotone,
    default_sample,
    estimate_bianchini_constants,
    estimate_kannan_constants,
    grid_sample,
    random_sample,
)
from .convex import Ball, Box, Halfspace, Hyperplane, contains, distance, project, sample_points
from .mappings import (
    AffineMap,
    AveragedMap,
    Mapping,
    PiecewiseTable,
    Reflection1D,
    Scale1D,
    apply,
    averaged,
    norm_dist,
)
from .solve import (
    IterationTrace,
    SolveConfig,
    aposteriori_bound,
    apriori_bound,
    auto_lambda,
    cauchy_window_bound,
    contraction_rate_kannan,
    krasnoselskij,
    rate_from_certificate,
    required_iterations,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AveragedMap",
    "Ball",
    "Box",
    "ContractionCertificate",
    "Halfspace",
    "Hyperplane",
    "IterationTrace",
    "Mapping",
    "PiecewiseTable",
    "Reflection1D",
    "SampleSet",
    "Scale1D",
    "SfpInstance",
    "SfpOperator",
    "SfpResult",
    "SolveConfig",
    "VipInstance",
    "VipOperator",
    "VipResult",
    "aposteriori_bound",
    "apply",
    "apriori_bound",
    "auto_lambda",
    "averaged",
    "cauchy_window_bound",
    "check_banach",
    "check_enriched_bianchini",
    "check_enriched_kannan",
    "check_monotone",
    "contains",
    "contraction_rate_kannan",
    "default_sample",
    "distance",
    "estimate_bianchini_constants",
    "estimate_kannan_constants",
    "grid_sample",
    "krasnoselskij",
    "norm_dist",
    "power_iteration",
    "project",
    "random_sample",
    "rate_from_certificate",
    "required_iterations",
    "sample_points",
    "sfp_operator",
    "solve_sfp",
    "solve_vip",
    "spectral_radius_ata",
    "vip_operator",
]
