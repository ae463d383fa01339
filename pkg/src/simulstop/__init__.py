"""Dependent stopping times with a positive probability of simultaneous occurrence.

Three exponential thresholds behind integrated intensities define a pair
of stopping times sharing a common shock; this package evaluates the
model's closed forms by adaptive quadrature, generalizes it to n
components and to Gumbel-linked thresholds, and cross-validates every
formula against an exact, reproducible Monte Carlo sampler.
"""

from .bivariate import (
    BivariateScenario,
    BoundSpec,
    Decomposition,
    ValueWithError,
    covariance,
    decompose,
    joint_hazard_ratio,
    joint_survival,
    l2_distance_sq,
    marginal_survival,
    prob_equal,
    prob_equal_and_before,
    prob_equal_bounds,
    prob_equal_closed,
    prob_equal_given_both_before,
    prob_equal_given_tau1_before,
    prob_within_eps,
    quadrant_prob,
)
from .errors import (
    BoundSpecError,
    ConfigError,
    DefectiveDistributionWarning,
    HorizonExceededError,
    InfiniteMomentError,
    InvalidIntervalError,
    NumericError,
    QuadratureBudgetError,
    SimulstopError,
    UndefinedConditionalError,
    UnsupportedScenarioError,
)
from .gumbel import (
    ErfcBoundReport,
    GumbelScenario,
    erfc_bound_h,
    erfc_bound_optimize,
    gumbel_covariance_constant,
    gumbel_joint_survival,
    gumbel_prob_equal,
    gumbel_prob_equal_dominated,
    neg_cov_condition,
)
from .intensity import (
    CompensatorCurve,
    DivergenceDiagnostic,
    IntensityModel,
    StatePath,
    SummedCompensator,
    compensator_at,
    simulate_ou_path,
    validate_divergence,
)
from .montecarlo import (
    EstimateWithCI,
    RngSpec,
    SamplePair,
    SystemSample,
    estimate,
    sample_eta,
    sample_gumbel_pair,
    sample_gumbel_pairs,
    sample_mo_pair,
    sample_mo_pairs,
    sample_system,
    sample_systems,
)
from .multivariate import (
    ShockSystem,
    SubsetPattern,
    joint_survival_n,
    pairwise_scenario,
    pattern_system,
    prob_all_equal,
    prob_all_equal_pattern,
)
from .quadrature import (
    Integrand1D,
    QuadratureResult,
    integrate_double,
    integrate_interval,
    integrate_semi_infinite,
)
from .validation import ValidationReport, validate_scenario

__version__ = "0.1.0"
