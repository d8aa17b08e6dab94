"""Two-phase pseudo-population bootstrap for superpopulation inference
under high-entropy unequal-probability sampling designs."""

from .designs import (
    DesignSpec,
    InclusionProbs,
    calibrate_conditional_poisson,
    draw,
    enumerate_design,
    inclusion_probs,
)
from .errors import (
    ConfigError,
    DegenerateCellError,
    FPResampleError,
    InvalidArgument,
    NumericFailure,
    NumericWarning,
    SingularKernelError,
    SizeLimitError,
)
from .estimate import (
    WeightedEDF,
    gamma_g,
    hajek_df,
    ht_df,
    kernel_C,
    moment_set,
    naive_edf,
    quantile,
    spearman_rho,
)
from .infer import (
    ConfidenceInterval,
    TestResult,
    cond_independence_test,
    marg_independence_test,
    quantile_ci,
)
from .popgen import ModelSpec, Population, true_quantile_oracle
from .resample import ResamplingDistribution, bootstrap
from .sample import Sample, draw_sample

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval",
    "ConfigError",
    "DegenerateCellError",
    "DesignSpec",
    "FPResampleError",
    "InclusionProbs",
    "InvalidArgument",
    "ModelSpec",
    "NumericFailure",
    "NumericWarning",
    "Population",
    "ResamplingDistribution",
    "Sample",
    "SingularKernelError",
    "SizeLimitError",
    "TestResult",
    "WeightedEDF",
    "bootstrap",
    "calibrate_conditional_poisson",
    "cond_independence_test",
    "draw",
    "draw_sample",
    "enumerate_design",
    "gamma_g",
    "hajek_df",
    "ht_df",
    "inclusion_probs",
    "kernel_C",
    "marg_independence_test",
    "moment_set",
    "naive_edf",
    "quantile",
    "quantile_ci",
    "spearman_rho",
    "true_quantile_oracle",
]
