"""Kloosterman sums and paths modulo odd prime powers.

Library layout:

- ``modular``: exact arithmetic mod p^n (inverses, square roots, lifting).
- ``kloosterman``: complete/partial sums, paths, completion toolkit.
- ``random_series``: the limiting random Fourier series and its law.
- ``stats``: moments, counts, fourth moments, tightness, KS distances.
- ``verify``: named verification suites built on all of the above.
- ``cli``: the ``klpath`` command.
"""

from .errors import (
    DegeneratePolynomial,
    DomainError,
    KlpathError,
    NotCoprime,
    NotInvertible,
    PatternCollision,
    PrecisionUnsupported,
    PreconditionViolated,
    ResourceLimit,
    UnsupportedRegime,
)
from .kloosterman import (
    KloostermanParams,
    KloostermanPath,
    PathPoint,
    beta_coeff,
    completed_step,
    fourier_alpha,
    kl_closed,
    kl_closed_over_units,
    kl_closed_table,
    kl_naive,
    kloosterman_path,
    partial_sums_stream,
    path_eval,
    path_polyline,
)
from .modular import (
    IntPolynomial,
    PrimePowerModulus,
    batch_inverse,
    count_quadratic_roots_closed,
    hensel_lift_roots,
    is_prime,
    jacobi_symbol,
    mod_inverse,
    padic_sqrt_coeffs,
    sqrt_mod_p,
    sqrt_mod_prime_power,
)
from .random_series import (
    SeriesVariate,
    limit_mixed_second_moment,
    mu_cdf,
    mu_cdf_left,
    mu_moment,
    mu_sample,
    mu_sample_array,
    series_eval,
    series_moment_mc,
    series_sample_paths,
    series_variate,
    substream,
)
from .stats import (
    ExperimentReport,
    IntervalSpec,
    MomentSpec,
    ShiftPattern,
    a_count_exact,
    empirical_moment,
    empirical_moments,
    fourth_moment,
    increment_moment,
    ks_statistic,
    n_count,
    quadruple_count,
    shifted_moment,
    shifted_moment_main_term,
    tightness_sweep,
)

__version__ = "0.1.0"
