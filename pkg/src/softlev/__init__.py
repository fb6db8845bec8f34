"""softlev: softmax and leverage-score query models under query constraints.

Exact output distributions, statistical distances with closed-form gap
bounds, constrained query optimization, likelihood-ratio hypothesis testing
with Monte-Carlo sample-complexity estimation, and a reproducible experiment
harness.  Hot kernels are numba-compiled with a pure-numpy fallback
(set ``SOFTLEV_DISABLE_NUMBA=1`` to force the fallback).
"""

from ._kernels import BACKEND
from .bounds import (
    BoundReport,
    extremal_pair,
    lemma_h2_bound,
    lemma_tv_bound,
    leverage_lb_quantity,
    softmax_lb_quantity,
)
from .distributions import (
    DiscreteDistribution,
    draw,
    hellinger_sq,
    mean_under,
    tv,
    variance_under,
)
from .errors import (
    INDISTINGUISHABLE,
    BudgetExceeded,
    ConstraintViolation,
    DegenerateModel,
    DomainError,
    IndexOutOfRange,
    IndistinguishableError,
    InputFormatError,
    RankDeficient,
    ShapeMismatch,
    ZeroLeverage,
)
from .harness import (
    ExperimentSpec,
    ModelSpec,
    SweepRow,
    gaussian_instance,
    load_model_spec,
    low_mass_row_instance,
    padded_identity_instance,
    run_bound_suite,
    run_invariance_suite,
    run_sweep,
    run_taylor_check,
)
from .hypotest import (
    ModelOracle,
    OracleSpec,
    TestReport,
    estimate_sample_complexity,
    estimate_success,
    lrt_decide,
    run_test,
)
from .leverage import (
    BoxConstraint,
    ScaleQuery,
    leverage_pmf,
    leverage_pmf_derivative,
    leverage_sample,
    leverage_w,
)
from .numerics import gram, min_eigenvalue, row_gram_gap, thin_qr, two_to_infty_norm
from .optimize import (
    OptimizerConfig,
    OptResult,
    max_hellinger_leverage,
    max_hellinger_softmax,
    max_variance_leverage,
    max_variance_softmax,
)
from .rng import derive_seed, generator
from .softmax import EnergyConstraint, SoftmaxQuery, softmax_pmf, softmax_sample

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundReport",
    "BoxConstraint",
    "BudgetExceeded",
    "ConstraintViolation",
    "DegenerateModel",
    "DiscreteDistribution",
    "DomainError",
    "EnergyConstraint",
    "ExperimentSpec",
    "INDISTINGUISHABLE",
    "IndexOutOfRange",
    "IndistinguishableError",
    "InputFormatError",
    "ModelOracle",
    "ModelSpec",
    "OptResult",
    "OptimizerConfig",
    "OracleSpec",
    "RankDeficient",
    "ScaleQuery",
    "ShapeMismatch",
    "SoftmaxQuery",
    "SweepRow",
    "TestReport",
    "ZeroLeverage",
    "derive_seed",
    "draw",
    "estimate_sample_complexity",
    "estimate_success",
    "extremal_pair",
    "gaussian_instance",
    "generator",
    "gram",
    "hellinger_sq",
    "lemma_h2_bound",
    "lemma_tv_bound",
    "leverage_lb_quantity",
    "leverage_pmf",
    "leverage_pmf_derivative",
    "leverage_sample",
    "leverage_w",
    "load_model_spec",
    "low_mass_row_instance",
    "lrt_decide",
    "max_hellinger_leverage",
    "max_hellinger_softmax",
    "max_variance_leverage",
    "max_variance_softmax",
    "mean_under",
    "min_eigenvalue",
    "padded_identity_instance",
    "row_gram_gap",
    "run_bound_suite",
    "run_invariance_suite",
    "run_sweep",
    "run_taylor_check",
    "run_test",
    "softmax_lb_quantity",
    "softmax_pmf",
    "softmax_sample",
    "thin_qr",
    "tv",
    "two_to_infty_norm",
    "variance_under",
]
