"""Skew-orthogonal polynomial pairs for quartic exponential weights.

Two independent pipelines construct the same recursion data: one by
direct moment integration, one by difference equations seeded from six
closed-form pairs.  Analysis helpers validate the results against the
structure they must satisfy exactly.
"""

from .analysis import (
    CrossPipelineReport,
    DualityReport,
    GramReport,
    ZeroReport,
    cross_pipeline_report,
    duality_report,
    gram_report,
    identity_sweep,
    real_zero_structure,
    zero_report,
)
from .bootstrap import BootstrapResult, bootstrap_d2
from .errors import (
    CatastrophicCancellation,
    ConfigError,
    DegenerateNormalization,
    DiffeqDegeneracy,
    InsufficientMoments,
    InternalConsistencyFailure,
    NonIntegrableWeight,
    OutOfRangeEvaluation,
    PrecisionExhaustion,
    QuadratureNonConvergence,
    SkewPolyError,
    UnsupportedDegree,
)
from .moments import (
    MomentTable,
    moments_closed_form_alpha0,
    moments_quadrature,
    moments_recursion,
    required_k_max,
)
from .polynomials import (
    SkewPolyPair,
    bilinear_form,
    make_pair,
    multiply_by_x,
    poly_eval,
    psi_from_phi,
    skew_product,
)
from .recursion_diffeq import (
    DiffeqStepper,
    NormalizationLedger,
    identity_residual,
    identity_terms,
    run_diffeq,
)
from .recursion_integral import (
    IntegralRun,
    RecursionBand,
    advance,
    g_next,
    r_row,
    run_integral,
)
from .weight import WeightSpec, evaluate, quartic_spec, weight_squared
from .cli import RunConfig

__version__ = "0.1.0"

__all__ = [
    "BootstrapResult",
    "CatastrophicCancellation",
    "ConfigError",
    "CrossPipelineReport",
    "DegenerateNormalization",
    "DiffeqDegeneracy",
    "DiffeqStepper",
    "DualityReport",
    "GramReport",
    "InsufficientMoments",
    "IntegralRun",
    "InternalConsistencyFailure",
    "MomentTable",
    "NonIntegrableWeight",
    "NormalizationLedger",
    "OutOfRangeEvaluation",
    "PrecisionExhaustion",
    "QuadratureNonConvergence",
    "RecursionBand",
    "RunConfig",
    "SkewPolyError",
    "SkewPolyPair",
    "UnsupportedDegree",
    "WeightSpec",
    "ZeroReport",
    "advance",
    "bilinear_form",
    "bootstrap_d2",
    "cross_pipeline_report",
    "duality_report",
    "evaluate",
    "g_next",
    "gram_report",
    "identity_residual",
    "identity_sweep",
    "identity_terms",
    "make_pair",
    "moments_closed_form_alpha0",
    "moments_quadrature",
    "moments_recursion",
    "multiply_by_x",
    "poly_eval",
    "psi_from_phi",
    "quartic_spec",
    "r_row",
    "real_zero_structure",
    "required_k_max",
    "run_diffeq",
    "run_integral",
    "skew_product",
    "weight_squared",
    "zero_report",
]
