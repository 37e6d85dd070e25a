"""Barrier option pricing with randomized QMC and conditional sampling.

Prices discretely monitored knock-out and knock-in barrier options under
multi-asset Black-Scholes.  Paths are built through a full-rank linear
map A = C Q (Cholesky factor times a variance-concentrating orthogonal
matrix); barrier clauses become bounds on the first uniform coordinate,
which is rescaled into the admissible region and the sample weighted by
the region's measure.  A root-finding extension integrates the first
coordinate out in closed form.
"""

from .conditional import (BoundPair, IntervalUnion, cs_sample,
                          knockin_region, knockout_bounds, rescale_u1,
                          stepwise_cs_sample)
from .contracts import (BarrierClause, ContractSpec, barrier_threshold,
                        evaluate_payoff, smooth_payoff, survival_probability)
from .errors import (CapabilityError, ConfigError, FactorizationError,
                     LtBarrierError)
from .harness import (ConvergenceResult, EstimateSummary, ExperimentConfig,
                      analytic_down_in_put, convergence_alpha, run_estimate,
                      run_methods, variance_ratio_table)
from .lt import (LinearizedPayoff, PathTransform, build_lt_matrix,
                 build_path_transform, fix_first_column_sign,
                 lt_gradient_vector, next_lt_column)
from .market import (CovarianceFactor, MarketSpec, asset_paths,
                     build_covariance, cholesky)
from .qmc import (PointSetConfig, Randomization, generate_points, randomize,
                  replication_shifts)
from .rootfind import (PositivityRegion, Z1Profile, ZBounds,
                       analytic_z1_expectation, find_positivity_region,
                       profile_derivatives, rf_sample, safeguarded_root)

__version__ = "0.1.0"

__all__ = [
    "BarrierClause", "BoundPair", "CapabilityError", "ConfigError",
    "ContractSpec", "ConvergenceResult", "CovarianceFactor",
    "EstimateSummary", "ExperimentConfig", "FactorizationError",
    "IntervalUnion", "LinearizedPayoff", "LtBarrierError", "MarketSpec",
    "PathTransform", "PointSetConfig", "PositivityRegion", "Randomization",
    "Z1Profile", "ZBounds", "analytic_down_in_put",
    "analytic_z1_expectation", "asset_paths", "barrier_threshold",
    "build_covariance", "build_lt_matrix", "build_path_transform",
    "cholesky", "convergence_alpha", "cs_sample", "evaluate_payoff",
    "find_positivity_region", "fix_first_column_sign", "generate_points",
    "knockin_region", "knockout_bounds", "lt_gradient_vector",
    "next_lt_column", "profile_derivatives", "randomize",
    "replication_shifts", "rescale_u1", "rf_sample", "run_estimate",
    "run_methods", "safeguarded_root", "smooth_payoff",
    "stepwise_cs_sample", "survival_probability", "variance_ratio_table",
]
