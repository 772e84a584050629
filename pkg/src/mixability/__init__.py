"""Joint and complete mixability: decisions, certificates, constructions and VaR bounds."""

__version__ = "0.1.0"

from .construct import (
    BinaryLayerList,
    GaussianMixCertificate,
    UniformBlockMixture,
    binary_compose,
    binary_decompose,
    discrete_cm_decompose,
    gaussian_joint_mix,
    layer_sum_law,
    sample_binary_layers,
    sample_joint_mix,
)
from .criteria import (
    NormCheckReport,
    NormViolation,
    cm_concave_density,
    cm_density_floor,
    cm_monotone_density,
    decide,
    jm_elliptical,
    jm_monotone_densities,
    jm_support_screen,
    mean_condition,
    norm_check,
)
from .distributions import (
    BoundedBelowDensity,
    ConcaveDensity,
    DiscreteDistribution,
    Elliptical,
    MonotoneDensity,
    Normal,
    QuantileTable,
    SupportInterval,
    Uniform,
    discretize,
    essential_support,
    make_discrete,
    mean,
    point_mass,
    quantile,
    uniform_on,
)
from .exceptions import BudgetExceeded, InexactInputError, MixabilityError, SpecError
from .lpcert import DualCertificate, JointPmf, jm_lp_decide, verify_dual, verify_primal
from .rearrange import (
    Arrangement,
    MatrixInstance,
    SolveResult,
    brute_force,
    evaluate,
    jm_from_matrix,
    local_search,
)
from .riskbounds import (
    RiskBoundReport,
    StopLossCurve,
    bvar_estimate,
    comonotone_sum,
    convex_order_leq,
    phi_lower_bound,
    phi_upper_bound,
    stop_loss,
    wvar_estimate,
)
from .verdict import Status, Verdict

__all__ = [
    "Arrangement",
    "BinaryLayerList",
    "BoundedBelowDensity",
    "BudgetExceeded",
    "ConcaveDensity",
    "DiscreteDistribution",
    "DualCertificate",
    "Elliptical",
    "GaussianMixCertificate",
    "InexactInputError",
    "JointPmf",
    "MatrixInstance",
    "MixabilityError",
    "MonotoneDensity",
    "NormCheckReport",
    "NormViolation",
    "Normal",
    "QuantileTable",
    "RiskBoundReport",
    "SolveResult",
    "SpecError",
    "Status",
    "StopLossCurve",
    "SupportInterval",
    "Uniform",
    "UniformBlockMixture",
    "Verdict",
    "binary_compose",
    "binary_decompose",
    "brute_force",
    "bvar_estimate",
    "cm_concave_density",
    "cm_density_floor",
    "cm_monotone_density",
    "comonotone_sum",
    "convex_order_leq",
    "decide",
    "discrete_cm_decompose",
    "discretize",
    "essential_support",
    "evaluate",
    "gaussian_joint_mix",
    "jm_elliptical",
    "jm_from_matrix",
    "jm_lp_decide",
    "jm_monotone_densities",
    "jm_support_screen",
    "layer_sum_law",
    "local_search",
    "make_discrete",
    "mean",
    "mean_condition",
    "norm_check",
    "phi_lower_bound",
    "phi_upper_bound",
    "point_mass",
    "quantile",
    "sample_binary_layers",
    "sample_joint_mix",
    "stop_loss",
    "uniform_on",
    "verify_dual",
    "verify_primal",
    "wvar_estimate",
]
