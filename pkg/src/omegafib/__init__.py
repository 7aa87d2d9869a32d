"""omegafib: a counting laboratory for fibers that are insoluble at many primes.

The package has three layers:

* arithmetic substrate -- sieves, factorization, integer forms, local
  densities (``arith``, ``forms``, ``fibration``, ``densities``);
* probabilistic model -- independent Bernoulli sums indexed by primes, their
  exact pmf / MGF / moments, and the associated rate function and
  large-deviation bracket (``model``);
* experiments and audits -- point enumeration with prime-factor marking,
  tail statistics, and checkable analytic inequalities (``experiment``,
  ``inequalities``).

Hot loops live in ``kernels`` with a numba backend and a pure-numpy fallback
selected by the OMEGAFIB_NO_NUMBA environment variable.
"""

from .arith import Factorization, PrimeWindow, factorize, primes_up_to, truncation_window
from .densities import (
    SigmaTable,
    enumerated_sigma_table,
    fit_delta_beta,
    leading_constant,
    mertens_sum,
    sigma_p_exact,
    synthetic_sigma_table,
)
from .errors import BudgetError, ConfigError, CoverageError, IntegerBudgetError, OmegafibError
from .experiment import (
    ExperimentConfig,
    TailReport,
    WindowSpec,
    count_points,
    enumerate_points,
    exponent_regression,
    set_inclusion_audit,
    tail_count,
    truncation_gap,
)
from .fibration import (
    AlwaysNonsplit,
    Component,
    FibrationModel,
    ProjectivePoint,
    QuadraticResidue,
    ResidueClasses,
    hilbert_symbol,
    legendre_symbol,
    model_from_dict,
    parse_rule,
)
from .forms import IntegerForm, count_zeros_mod_p, parse_form, projective_point_count
from .model import (
    BernoulliModel,
    Interval,
    LdpBracket,
    RateFunction,
    exact_pmf,
    ldp_bracket,
    legendre_transform,
    log_mgf,
    moment_exact,
    normalized_log_mgf,
    pmf_with_overflow,
    poissonization_lambda,
    rate_grid,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "AlwaysNonsplit",
    "BernoulliModel",
    "BudgetError",
    "Component",
    "ConfigError",
    "CoverageError",
    "ExperimentConfig",
    "Factorization",
    "FibrationModel",
    "IntegerBudgetError",
    "IntegerForm",
    "Interval",
    "LdpBracket",
    "OmegafibError",
    "PrimeWindow",
    "ProjectivePoint",
    "QuadraticResidue",
    "RateFunction",
    "ResidueClasses",
    "SigmaTable",
    "TailReport",
    "WindowSpec",
    "count_points",
    "count_zeros_mod_p",
    "enumerate_points",
    "enumerated_sigma_table",
    "exact_pmf",
    "exponent_regression",
    "factorize",
    "fit_delta_beta",
    "hilbert_symbol",
    "ldp_bracket",
    "leading_constant",
    "legendre_symbol",
    "legendre_transform",
    "log_mgf",
    "mertens_sum",
    "model_from_dict",
    "moment_exact",
    "normalized_log_mgf",
    "parse_form",
    "parse_rule",
    "pmf_with_overflow",
    "poissonization_lambda",
    "primes_up_to",
    "projective_point_count",
    "rate_grid",
    "sample",
    "set_inclusion_audit",
    "sigma_p_exact",
    "synthetic_sigma_table",
    "tail_count",
    "truncation_gap",
    "truncation_window",
    "__version__",
]
