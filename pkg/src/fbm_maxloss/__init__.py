"""Expected maximum loss (maximum drawdown) of fractional Brownian motion.

Exact Cholesky simulation, closed-form bounds and Gaussian-comparison lower
bounds, with a command-line front end (``fbm-maxloss``).
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundEntry,
    BoundReport,
    bound_report,
    comparison_distance,
    markov_tail_bound,
    prior_bounds,
    max_loss_bounds,
)
from .core import (  # noqa: E402
    FbmPath,
    HurstParameter,
    TimeGrid,
    asset_price_transform,
    covariance,
    increment_autocovariance,
    rescale_expected_max_loss,
)
from .errors import (  # noqa: E402
    DomainError,
    FbmError,
    NotPositiveDefiniteError,
    RegimeError,
    SizeError,
    ValidationError,
)
from .pathstats import PathFunctionals, functionals, maximum_loss  # noqa: E402
from .simulation import (  # noqa: E402
    CholeskyFactor,
    CovarianceMatrix,
    McEstimate,
    SeedManifest,
    build_covariance_matrix,
    cholesky_factorize,
    monte_carlo_max_loss,
    sample_path,
)
from .vitale import (  # noqa: E402
    build_increment_family,
    expected_max_comonotone,
    expected_max_independent,
    maximize_idd,
    maximize_pddd,
    vitale_lower_bound,
)
