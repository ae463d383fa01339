"""Closed-form analytics for two stopping times sharing a common shock.

The model: three independent unit-exponential thresholds behind
compensators A1, A2, A3 define eta_i = inf{s : A_i(s) >= Z_i}; the
observed times are tau_1 = min(eta_1, eta_3) and tau_2 = min(eta_2,
eta_3).  The joint survival is E[exp(-A1(s) - A2(t) - A3(max(s,t)))],
which places positive mass on the diagonal {tau_1 = tau_2} whenever the
common channel alpha3 is active.

Every operation conditions on the state path (closed form per path) and
averages over an ensemble when the scenario is stochastic; results then
carry an ensemble standard error.  All double integrals split at the
diagonal, where A3(max(s,t)) has a kink.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BoundSpecError,
    ConfigError,
    DefectiveDistributionWarning,
    InfiniteMomentError,
    InvalidIntervalError,
    UndefinedConditionalError,
    UnsupportedScenarioError,
)
from .intensity import (
    CompensatorCurve,
    IntensityModel,
    StatePath,
    SummedCompensator,
    validate_divergence,
)
from .quadrature import integrate_auto, integrate_double, integrate_segments

__all__ = [
    "BivariateScenario",
    "Decomposition",
    "BoundSpec",
    "ValueWithError",
    "joint_survival",
    "marginal_survival",
    "prob_equal",
    "prob_equal_closed",
    "prob_equal_bounds",
    "decompose",
    "prob_equal_and_before",
    "prob_equal_given_tau1_before",
    "prob_equal_given_both_before",
    "quadrant_prob",
    "joint_hazard_ratio",
    "prob_within_eps",
    "l2_distance_sq",
    "covariance",
]

# exponent level at which integrand tails are cut: exp(-46) ~ 1e-20
TAIL_LEVEL = 46.0
# x-weighted (second moment) integrands get a deeper cut
HEAVY_TAIL_LEVEL = 60.0
DEFAULT_OP_TOL = 1e-12
CONDITIONAL_FLOOR = 1e-12


class ValueWithError(float):
    """A float result carrying its numerical error budget.

    ``abs_error_estimate`` is the quadrature/tail estimate; for stochastic
    scenarios ``ensemble_se`` holds the standard error of the path-ensemble
    average over ``n_paths`` paths (None for deterministic scenarios).
    """

    abs_error_estimate: float
    ensemble_se: Optional[float]
    n_paths: int

    def __new__(cls, value, abs_error_estimate=0.0, ensemble_se=None, n_paths=1):
        obj = super().__new__(cls, value)
        obj.abs_error_estimate = float(abs_error_estimate)
        obj.ensemble_se = None if ensemble_se is None else float(ensemble_se)
        obj.n_paths = int(n_paths)
        return obj


class _Kernel:
    """Compensator triple for one realized path (or none for constants)."""

    def __init__(self, scenario: "BivariateScenario", path: Optional[StatePath]):
        self.c1 = CompensatorCurve(scenario.alpha1, path)
        self.c2 = CompensatorCurve(scenario.alpha2, path)
        self.c3 = CompensatorCurve(scenario.alpha3, path)
        self.total = SummedCompensator([self.c1, self.c2, self.c3])
        self.sum13 = SummedCompensator([self.c1, self.c3])
        self.sum23 = SummedCompensator([self.c2, self.c3])
        # shared kink grid: integrands are smooth between path nodes only
        self.grid = path.grid if any(
            not c.is_constant for c in (self.c1, self.c2, self.c3)
        ) else None

    @property
    def horizon(self) -> float:
        return self.total.horizon

    def log_survival(self, s: float, t: float) -> float:
        return -(
            self.c1.compensator_at(s)
            + self.c2.compensator_at(t)
            + self.c3.compensator_at(max(s, t))
        )

    def survival(self, s: float, t: float) -> float:
        return math.exp(self.log_survival(s, t))

    def integrate(self, f_vec, lo: float, hi: float, tol: float):
        """Integrate a vectorized integrand, segment-wise on path grids."""
        res = integrate_auto(f_vec, lo, hi, tol, edges=self.grid)
        return res.value, res.abs_error_estimate

    def equal_density_integral(self, lo: float, hi: float, tol: float):
        """int_lo^hi alpha3(s) exp(-A1-A2-A3)(s) ds with its error estimate."""
        if hi <= lo:
            return 0.0, 0.0
        f = lambda xs: self.c3.rate_at(xs) * np.exp(-self.total.compensator_at(xs))
        return self.integrate(f, lo, hi, tol)

    def cut_time(self, summed: SummedCompensator, level: float) -> tuple[float, float]:
        """Truncation time for exp(-summed) integrands, with a tail bound."""
        t_cut = summed.time_to_level(level)
        if math.isinf(t_cut):
            # non-divergent sum of constant rates: nothing decays; integrate
            # a long horizon and report the (possibly large) tail honestly
            t_cut = 1e6
        tail = math.exp(-float(summed.compensator_at(min(t_cut, summed.horizon))))
        return t_cut, tail


@dataclass(frozen=True)
class BivariateScenario:
    """Intensity triple plus (optionally) the path machinery behind it.

    ``path`` fixes the state trajectory (conditional law); a
    ``path_ensemble`` requests the outer expectation over that family of
    trajectories.  Scenarios without path-driven models need neither.
    """

    alpha1: IntensityModel
    alpha2: IntensityModel
    alpha3: IntensityModel
    path: Optional[StatePath] = None
    path_ensemble: Optional[Sequence[StatePath]] = None

    def __post_init__(self):
        if self.is_path_driven and self.path is None and not self.path_ensemble:
            raise ConfigError("path-driven scenario requires a path or a path ensemble")
        if self.path is not None and self.path_ensemble:
            raise ConfigError("give either a fixed path or an ensemble, not both")
        # defective-marginal diagnostics (warn, do not reject)
        k = self._kernels()[0]
        for label, summed in (("alpha1+alpha3", k.sum13), ("alpha2+alpha3", k.sum23)):
            diag = validate_divergence(summed)
            if not diag.divergent:
                warnings.warn(
                    f"{label} compensator may not diverge ({diag.message}); "
                    "the corresponding marginal is defective",
                    DefectiveDistributionWarning,
                    stacklevel=2,
                )

    @property
    def is_path_driven(self) -> bool:
        return any(m.is_path_driven for m in (self.alpha1, self.alpha2, self.alpha3))

    @property
    def is_deterministic_time(self) -> bool:
        """True when the state is elapsed time itself (X_t = t)."""
        if not self.is_path_driven:
            return True
        return self.path is not None and self.path.is_identity

    def _kernels(self) -> list[_Kernel]:
        cached = getattr(self, "_kernel_cache", None)
        if cached is None:
            if not self.is_path_driven or self.path is not None:
                cached = [_Kernel(self, self.path)]
            else:
                cached = [_Kernel(self, p) for p in self.path_ensemble]
            object.__setattr__(self, "_kernel_cache", cached)
        return cached

    def constant_rates(self) -> tuple[float, float, float]:
        """The three effective rates; raises for path-driven scenarios."""
        return (
            self.alpha1.constant_rate,
            self.alpha2.constant_rate,
            self.alpha3.constant_rate,
        )

    @classmethod
    def from_constants(cls, rate1: float, rate2: float, rate3: float) -> "BivariateScenario":
        return cls(
            IntensityModel.constant(rate1),
            IntensityModel.constant(rate2),
            IntensityModel.constant(rate3),
        )


def _expect(sc: BivariateScenario, per_kernel: Callable[[_Kernel], tuple[float, float]]) -> ValueWithError:
    """Average a per-path (value, error) closed form over the scenario's kernels."""
    kernels = sc._kernels()
    if len(kernels) == 1:
        v, e = per_kernel(kernels[0])
        return ValueWithError(v, e)
    pairs = [per_kernel(k) for k in kernels]
    vals = np.array([p[0] for p in pairs])
    errs = np.array([p[1] for p in pairs])
    n = len(kernels)
    mean = float(np.sum(vals) / n)
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ValueWithError(mean, float(np.sum(errs) / n), ensemble_se=se, n_paths=n)


# ---------------------------------------------------------------------------
# survival functions
# ---------------------------------------------------------------------------


def joint_survival(sc: BivariateScenario, s: float, t: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 > s, tau_2 > t) = E[exp(-A1(s) - A2(t) - A3(max(s,t)))]."""
    if s < 0 or t < 0:
        raise ValueError("times must be nonnegative")
    return _expect(sc, lambda k: (k.survival(s, t), 0.0))


def marginal_survival(sc: BivariateScenario, i: int, s: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_i > s); identical to the joint survival with the other time at 0."""
    if i not in (1, 2):
        raise ValueError("component index must be 1 or 2")
    return joint_survival(sc, s, 0.0, tol) if i == 1 else joint_survival(sc, 0.0, s, tol)


# ---------------------------------------------------------------------------
# probability of simultaneous occurrence
# ---------------------------------------------------------------------------


def prob_equal(sc: BivariateScenario, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = tau_2) = E[int_0^inf alpha3 exp(-A1-A2-A3) ds]."""

    def per_kernel(k: _Kernel):
        t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
        hi = min(t_cut, k.horizon)
        val, err = k.equal_density_integral(0.0, hi, tol)
        return val, err + tail

    return _expect(sc, per_kernel)


def prob_equal_closed(kind: str, params: Sequence[float]) -> float:
    """Constant-rate and proportional-rate closed forms for P(tau_1 = tau_2)."""
    if kind == "constant":
        a1, a2, a3 = params
        if min(a1, a2, a3) < 0 or a1 + a2 + a3 <= 0:
            raise ConfigError("constant rates must be nonnegative with positive sum")
        return a3 / (a1 + a2 + a3)
    if kind == "proportional":
        a1, a2 = params
        if a1 <= 0 or a2 <= 0:
            raise ConfigError("proportionality factors must be positive")
        return 1.0 / (a1 + a2 + 1.0)
    raise ConfigError(f"unknown closed form kind {kind!r}")


# ---------------------------------------------------------------------------
# bounds on P(tau_1 = tau_2)
# ---------------------------------------------------------------------------

_BOUND_KINDS = (
    "bounded_intensity",
    "bounded_sum_compensators",
    "compensator_ratio",
    "intensity_vs_sum",
)


@dataclass(frozen=True)
class BoundSpec:
    """Hypotheses under which P(tau_1 = tau_2) is sandwiched.

    Bound constants are deterministic at desk scale; ``beta_shape``
    documents the common reference rate of the bounded-intensity case and
    does not enter the bound values.
    """

    kind: str
    lower: tuple
    upper: tuple
    beta_shape: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind not in _BOUND_KINDS:
            raise BoundSpecError(f"unknown bound kind {self.kind!r}")
        if len(self.lower) != len(self.upper):
            raise BoundSpecError("lower/upper length mismatch")
        for lo, hi in zip(self.lower, self.upper):
            if not (0 < lo <= hi < math.inf):
                raise BoundSpecError(f"need 0 < lower <= upper < inf, got ({lo}, {hi})")
        if self.kind == "intensity_vs_sum":
            (lo,), (hi,) = self.lower, self.upper
            if not hi < lo + 1.0:
                raise BoundSpecError("intensity_vs_sum requires upper < lower + 1")

    @classmethod
    def bounded_intensity(cls, l1, l2, l3, u1, u2, u3, beta_shape=None) -> "BoundSpec":
        return cls("bounded_intensity", (l1, l2, l3), (u1, u2, u3), beta_shape)

    @classmethod
    def bounded_sum_compensators(cls, lower: float, upper: float) -> "BoundSpec":
        return cls("bounded_sum_compensators", (lower,), (upper,))

    @classmethod
    def compensator_ratio(cls, lower: float, upper: float) -> "BoundSpec":
        return cls("compensator_ratio", (lower,), (upper,))

    @classmethod
    def intensity_vs_sum(cls, lower: float, upper: float) -> "BoundSpec":
        return cls("intensity_vs_sum", (lower,), (upper,))


def prob_equal_bounds(spec: BoundSpec) -> tuple[float, float]:
    """Sandwich for P(tau_1 = tau_2) under the given hypotheses."""
    if spec.kind == "bounded_intensity":
        l1, l2, l3 = spec.lower
        u1, u2, u3 = spec.upper
        return l3 / (u1 + u2 + u3), u3 / (l1 + l2 + l3)
    if spec.kind == "bounded_sum_compensators":
        (lo,), (hi,) = spec.lower, spec.upper
        return math.exp(-hi), math.exp(-lo)
    if spec.kind == "compensator_ratio":
        (lo,), (hi,) = spec.lower, spec.upper
        return 1.0 / (hi + 1.0), 1.0 / (lo + 1.0)
    (lo,), (hi,) = spec.lower, spec.upper
    return lo / (hi + 1.0), hi / (lo + 1.0)


# ---------------------------------------------------------------------------
# decomposition into absolutely continuous and singular parts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """Weight and component values of the joint survival split.

    ``beta * f_aa_value + (1 - beta) * f_sing_value`` reconstructs the
    joint survival at the queried point.
    """

    beta: float
    f_aa_value: float
    f_sing_value: float


def decompose(sc: BivariateScenario, s: float, t: float, tol: float = DEFAULT_OP_TOL) -> Decomposition:
    """Split the joint survival at (s, t) into its smooth and diagonal parts.

    Only defined for deterministic time (state = elapsed time); stochastic
    scenarios raise :class:`UnsupportedScenarioError`.
    """
    if s < 0 or t < 0:
        raise ValueError("times must be nonnegative")
    if not sc.is_deterministic_time:
        raise UnsupportedScenarioError(
            "decomposition requires a deterministic-time scenario (X_t = t)"
        )
    k = sc._kernels()[0]
    t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
    hi = min(t_cut, k.horizon)

    def weighted(lo: float) -> float:
        val, _ = k.equal_density_integral(lo, max(lo, hi), tol)
        return val

    beta = 1.0 - weighted(0.0)  # int (a1+a2) e^{-sum A} = 1 - int a3 e^{-sum A}
    beta = min(max(beta, 0.0), 1.0)
    v = max(s, t)
    tail_from_v = weighted(min(v, hi))
    surv = k.survival(s, t)
    f_sing = tail_from_v / (1.0 - beta) if beta < 1.0 else 1.0
    f_aa = (surv - tail_from_v) / beta if beta > 0.0 else 1.0
    return Decomposition(beta=beta, f_aa_value=f_aa, f_sing_value=f_sing)


# ---------------------------------------------------------------------------
# conditional probabilities
# ---------------------------------------------------------------------------


def prob_equal_and_before(sc: BivariateScenario, t: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = tau_2, tau_1 <= t)."""
    if t < 0:
        raise ValueError("time must be nonnegative")

    def per_kernel(k: _Kernel):
        t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
        hi = min(t, t_cut, k.horizon)
        val, err = k.equal_density_integral(0.0, hi, tol)
        if t > hi:
            err += tail
        return val, err

    return _expect(sc, per_kernel)


def _conditional(sc, t, tol, denominator: Callable[[_Kernel, float], float]) -> ValueWithError:
    if t <= 0:
        raise UndefinedConditionalError("conditioning event has probability 0 at t = 0")

    def per_kernel(k: _Kernel):
        den = denominator(k, t)
        if den < CONDITIONAL_FLOOR:
            raise UndefinedConditionalError(
                f"conditioning probability {den:.3e} below {CONDITIONAL_FLOOR}"
            )
        t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
        hi = min(t, t_cut, k.horizon)
        num, err = k.equal_density_integral(0.0, hi, tol)
        if t > hi:
            err += tail
        return num / den, err / den

    return _expect(sc, per_kernel)


def prob_equal_given_tau1_before(sc: BivariateScenario, t: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = tau_2 | tau_1 <= t)."""
    return _conditional(
        sc, t, tol, lambda k, tt: 1.0 - math.exp(-(k.sum13.compensator_at(tt)))
    )


def prob_equal_given_both_before(sc: BivariateScenario, t: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = tau_2 | tau_1 <= t, tau_2 <= t)."""

    def den(k: _Kernel, tt: float) -> float:
        a1 = k.c1.compensator_at(tt)
        a2 = k.c2.compensator_at(tt)
        a3 = k.c3.compensator_at(tt)
        return 1.0 - math.exp(-a3) * (
            math.exp(-a2) + math.exp(-a1) - math.exp(-a1 - a2)
        )

    return _conditional(sc, t, tol, den)


# ---------------------------------------------------------------------------
# distance and dependence functionals
# ---------------------------------------------------------------------------


def quadrant_prob(sc: BivariateScenario, s: float, t: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(s < tau_1 <= t, s < tau_2 <= t) for s < t, by inclusion-exclusion."""
    if not s < t:
        raise InvalidIntervalError(f"need s < t, got s={s}, t={t}")
    if s < 0:
        raise ValueError("times must be nonnegative")

    def per_kernel(k: _Kernel):
        val = (
            k.survival(s, s)
            - k.survival(s, t)
            - k.survival(t, s)
            + k.survival(t, t)
        )
        return val, 0.0

    return _expect(sc, per_kernel)


def joint_hazard_ratio(sc: BivariateScenario, t: float, eps: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(both in (t, t+eps] | both > t) / eps.

    Converges to E[alpha3(X_t)] as eps -> 0 (first-order in eps).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t < 0:
        raise ValueError("time must be nonnegative")
    kernels = sc._kernels()
    nums = []
    dens = []
    for k in kernels:
        den = k.survival(t, t)
        num = (
            den
            - k.survival(t, t + eps)
            - k.survival(t + eps, t)
            + k.survival(t + eps, t + eps)
        )
        nums.append(num)
        dens.append(den)
    mean_den = float(np.sum(dens) / len(dens))
    if mean_den < CONDITIONAL_FLOOR:
        raise UndefinedConditionalError("survival at (t, t) numerically zero")
    mean_num = float(np.sum(nums) / len(nums))
    value = mean_num / mean_den / eps
    if len(kernels) == 1:
        return ValueWithError(value, 0.0)
    ratios_se = float(np.std(np.array(nums) / mean_den / eps, ddof=1) / math.sqrt(len(kernels)))
    return ValueWithError(value, 0.0, ensemble_se=ratios_se, n_paths=len(kernels))


def prob_within_eps(sc: BivariateScenario, eps: float, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(|tau_1 - tau_2| <= eps); equals P(tau_1 = tau_2) at eps = 0."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")

    def per_kernel(k: _Kernel):
        t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
        hi = min(t_cut, max(k.horizon - eps, 0.0))
        edges = k.grid
        if edges is not None and eps > 0.0:
            # the shifted compensator kinks at grid - eps as well
            shifted = edges - eps
            edges = np.unique(np.concatenate([edges, shifted[shifted > 0.0]]))

        def escape(c_self: CompensatorCurve, other: SummedCompensator):
            f = lambda xs: c_self.rate_at(xs) * np.exp(
                -(c_self.compensator_at(xs) + other.compensator_at(xs + eps))
            )
            res = integrate_auto(f, 0.0, hi, tol, edges=edges)
            return res.value, res.abs_error_estimate

        v1, e1 = escape(k.c1, k.sum23)
        v2, e2 = escape(k.c2, k.sum13)
        return 1.0 - (v1 + v2), e1 + e2 + 2.0 * tail

    return _expect(sc, per_kernel)


def _require_finite_moments(k: _Kernel) -> None:
    for label, summed in (("tau_1", k.sum13), ("tau_2", k.sum23)):
        diag = validate_divergence(summed)
        if not diag.divergent:
            raise InfiniteMomentError(
                f"{label} law is defective ({diag.message}); second moment diverges"
            )


def l2_distance_sq(sc: BivariateScenario, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """E[(tau_1 - tau_2)^2] via two-dimensional integration by parts."""

    def per_kernel(k: _Kernel):
        _require_finite_moments(k)
        hor = k.horizon
        t13, tail13 = k.cut_time(k.sum13, HEAVY_TAIL_LEVEL)
        t23, tail23 = k.cut_time(k.sum23, HEAVY_TAIL_LEVEL)
        hi13 = min(t13, hor)
        hi23 = min(t23, hor)

        v1, e1 = k.integrate(
            lambda xs: xs * np.exp(-k.sum13.compensator_at(xs)), 0.0, hi13, tol
        )
        v2, e2 = k.integrate(
            lambda xs: xs * np.exp(-k.sum23.compensator_at(xs)), 0.0, hi23, tol
        )
        lower, upper = _cross_moment_integrals(k, tol)
        value = 2.0 * (v1 + v2 - lower.value - upper.value)
        err = 2.0 * (
            e1
            + e2
            + lower.abs_error_estimate
            + upper.abs_error_estimate
            + (1.0 + hi13) * tail13
            + (1.0 + hi23) * tail23
        )
        return value, err

    return _expect(sc, per_kernel)


def _cross_moment_integrals(k: _Kernel, tol: float):
    """The two halves of E[tau_1 tau_2] = int int survival, split at the diagonal.

    Constant kernels go through the generic region integrator; path-driven
    kernels factor the inner integral into a reusable cumulative (the
    integrand is a product of functions of x and of y on each region).
    """
    hor = k.horizon
    t_all, _ = k.cut_time(k.total, HEAVY_TAIL_LEVEL)
    t23, _ = k.cut_time(k.sum23, HEAVY_TAIL_LEVEL)
    t13, _ = k.cut_time(k.sum13, HEAVY_TAIL_LEVEL)
    y_hi = min(max(t_all, t23), hor)
    x_hi = min(max(t_all, t13), hor)

    if k.grid is None:
        # x < y: exponent A1(x) + (A2+A3)(y)
        lower = integrate_double(
            lambda x, y: math.exp(-(k.c1.compensator_at(x) + k.sum23.compensator_at(y))),
            region="lower",
            tol=tol,
            x_max=x_hi,
            y_max=y_hi,
        )
        # x > y: exponent (A1+A3)(x) + A2(y)
        upper = integrate_double(
            lambda x, y: math.exp(-(k.sum13.compensator_at(x) + k.c2.compensator_at(y))),
            region="upper",
            tol=tol,
            x_max=x_hi,
            y_max=y_hi,
        )
        return lower, upper

    top = min(max(x_hi, y_hi), hor)
    edges = np.concatenate(
        ([0.0], k.grid[(k.grid > 0.0) & (k.grid < top)], [top])
    )
    f1 = lambda xs: np.exp(-k.c1.compensator_at(xs))
    f13 = lambda xs: np.exp(-k.sum13.compensator_at(xs))
    cum1 = _SegmentCumulative(f1, edges)
    cum13 = _SegmentCumulative(f13, edges)
    lower = integrate_segments(
        lambda ys: np.exp(-k.sum23.compensator_at(ys)) * cum1.at(ys), edges
    )
    upper = integrate_segments(
        lambda ys: np.exp(-k.c2.compensator_at(ys)) * (cum13.total - cum13.at(ys)),
        edges,
    )
    return lower, upper


class _SegmentCumulative:
    """F(y) = int_edges[0]^y f, built from per-segment Kronrod panels."""

    def __init__(self, f_vec, edges: np.ndarray):
        from .quadrature import _gk_tables

        self.f_vec = f_vec
        self.edges = edges
        nodes, wg, wk = _gk_tables()
        self._nodes, self._wk = nodes, wk
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        fx = np.asarray(f_vec(xs), dtype=float).reshape(-1, nodes.size)
        seg_vals = (fx @ wk) * half
        self._cum = np.concatenate(([0.0], np.cumsum(seg_vals)))
        self.total = float(self._cum[-1])

    def at(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        idx = np.clip(
            np.searchsorted(self.edges, ys, side="right") - 1, 0, self.edges.size - 2
        )
        lo = self.edges[idx]
        half = 0.5 * (ys - lo)
        mid = 0.5 * (ys + lo)
        xs = (mid[:, None] + half[:, None] * self._nodes[None, :]).ravel()
        fx = np.asarray(self.f_vec(xs), dtype=float).reshape(-1, self._nodes.size)
        partial = (fx @ self._wk) * half
        return self._cum[idx] + partial


def covariance(sc: BivariateScenario, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """Cov(tau_1, tau_2); nonnegative for every common-shock scenario."""
    kernels = sc._kernels()
    cross_vals = []
    m1_vals = []
    m2_vals = []
    err = 0.0
    for k in kernels:
        _require_finite_moments(k)
        hor = k.horizon
        t13, tail13 = k.cut_time(k.sum13, HEAVY_TAIL_LEVEL)
        t23, tail23 = k.cut_time(k.sum23, HEAVY_TAIL_LEVEL)
        m1, e1 = k.integrate(
            lambda xs: np.exp(-k.sum13.compensator_at(xs)), 0.0, min(t13, hor), tol
        )
        m2, e2 = k.integrate(
            lambda xs: np.exp(-k.sum23.compensator_at(xs)), 0.0, min(t23, hor), tol
        )
        lower, upper = _cross_moment_integrals(k, tol)
        cross_vals.append(lower.value + upper.value)
        m1_vals.append(m1)
        m2_vals.append(m2)
        err += (
            lower.abs_error_estimate
            + upper.abs_error_estimate
            + e1
            + e2
            + tail13
            + tail23
        )
    n = len(kernels)
    cross = float(np.sum(cross_vals) / n)
    mean1 = float(np.sum(m1_vals) / n)
    mean2 = float(np.sum(m2_vals) / n)
    value = cross - mean1 * mean2
    if n == 1:
        return ValueWithError(value, err)
    covs = np.array(cross_vals) - mean1 * mean2
    se = float(np.std(covs, ddof=1) / math.sqrt(n))
    return ValueWithError(value, err / n, ensemble_se=se, n_paths=n)
