"""Hyperdimensional transform toolkit.

Functions and probability distributions are represented as fixed-dimension
hypervectors built from length-scale encoders; the package provides the
forward/inverse/empirical transforms on them, distribution operations
(distance, deconvolution, sampling, conditioning), closed-form regression and
classification heads, and a CLI that reproduces the desk-scale experiments.
"""

from .core import BIPOLAR, REAL, Hypervector, aggregate, bind, inner, permute, sign_of
from .distributions import (
    MHConfig,
    MixtureSolution,
    ProductSpace,
    bayes_posterior,
    condition,
    deconvolve,
    joint_eval,
    marginalize,
    mh_sample,
    mmd,
    ones_transform,
    product_independent,
)
from .empirical import (
    DensityPolicy,
    Sample,
    density_eval,
    empirical_distribution,
    empirical_function,
    load_sample,
)
from .encoders import (
    BIPOLAR_SIGN,
    COS_SIN,
    IID_SYMBOL,
    REAL_COSINE,
    EncoderSpec,
    Interval,
    SequenceDomain,
    SymbolSet,
    make_encoder,
    select_informative_dims,
)
from .errors import (
    CalibrationError,
    ConditioningError,
    ConvergenceError,
    DegenerateConditionalError,
    DivergenceError,
    InitializationError,
    InstabilityError,
    LeverageError,
    NullEventError,
    RankDeficiencyError,
    RejectedInputError,
    UnsupportedError,
)
from .normalization import (
    NormalizedEncoder,
    QuadratureGrid,
    default_grid,
    interval_grid,
    set_grid,
    solve_normalized,
)
from .transform import (
    DISTRIBUTION,
    FUNCTION,
    TransformVec,
    bipolar_transform,
    derivative_eval,
    dirac_transform,
    forward_distribution,
    forward_function,
    integral_inner,
    inverse_eval,
    inverse_eval_many,
)

__version__ = "0.1.0"
