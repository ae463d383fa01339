"""Gumbel-linked pair model and the complementary-error-function bound.

Linking the first two exponential thresholds through the Gumbel bivariate
survival exp(-s - t - delta*s*t) deforms the joint law of the stopping
times to

    P(tau_1 > s, tau_2 > t)
        = E[exp(-A1(s) - A2(t) - delta*A1(s)*A2(t) - A3(max(s, t)))],

which preserves the marginals and the positive probability of equality
while allowing negative covariance for delta = 1 and idiosyncratic rates
sufficiently large relative to the common one.

The module also provides h(x, l) = 2x/(4x^2+l) e^{-x^2} - int_x^inf
e^{-u^2} du and the optimizer that locates the largest l keeping
h(., l) >= 0 on [1, inf) -- the machinery behind the negative-covariance
proof's tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bivariate import (
    DEFAULT_OP_TOL,
    TAIL_LEVEL,
    BivariateScenario,
    ValueWithError,
    _expect,
)
from .errors import ConfigError, NumericError
from .quadrature import integrate_semi_infinite

__all__ = [
    "GumbelScenario",
    "ErfcBoundReport",
    "gumbel_joint_survival",
    "gumbel_prob_equal",
    "gumbel_prob_equal_dominated",
    "gumbel_covariance_constant",
    "neg_cov_condition",
    "erfc_bound_h",
    "erfc_bound_optimize",
    "gaussian_tail",
]


@dataclass(frozen=True)
class GumbelScenario:
    """A bivariate scenario whose thresholds Z1, Z2 are Gumbel-linked."""

    base: BivariateScenario
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta}")

    @classmethod
    def from_constants(cls, rate1, rate2, rate3, delta) -> "GumbelScenario":
        return cls(BivariateScenario.from_constants(rate1, rate2, rate3), delta)


def gumbel_joint_survival(
    gs: GumbelScenario, s: float, t: float, tol: float = DEFAULT_OP_TOL
) -> ValueWithError:
    """P(tau_1 > s, tau_2 > t) under the Gumbel-linked thresholds."""
    if s < 0 or t < 0:
        raise ValueError("times must be nonnegative")
    delta = gs.delta

    def per_kernel(k):
        a1 = k.c1.compensator_at(s)
        a2 = k.c2.compensator_at(t)
        a3 = k.c3.compensator_at(max(s, t))
        return math.exp(-(a1 + a2 + a3) - delta * a1 * a2), 0.0

    return _expect(gs.base, per_kernel)


def gumbel_prob_equal(gs: GumbelScenario, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = tau_2) = E[int alpha3 exp(-(A1+A2+A3) - delta*A1*A2) dt]."""
    delta = gs.delta

    def per_kernel(k):
        t_cut, tail = k.cut_time(k.total, TAIL_LEVEL)
        hi = min(t_cut, k.horizon)

        def f(xs):
            extra = delta * k.c1.compensator_at(xs) * k.c2.compensator_at(xs)
            return k.c3.rate_at(xs) * np.exp(-k.total.compensator_at(xs) - extra)

        val, err = k.integrate(f, 0.0, hi, tol)
        return val, err + tail

    return _expect(gs.base, per_kernel)


def gumbel_prob_equal_dominated(
    lambda1: float,
    lambda2: float,
    lambda3: float,
    delta: float,
    tol: float = DEFAULT_OP_TOL,
) -> tuple[float, float]:
    """(Gumbel-linked equality probability, common-shock value it is dominated by).

    Constant intensities only.  Uses the completed-square reduction

        lambda3 / sqrt(delta l1 l2) * exp(x^2) * int_x^inf e^{-u^2} du,
        x = (l1+l2+l3) / (2 sqrt(delta l1 l2)),

    evaluated in the overflow-safe form int_0^inf e^{-v^2 - 2xv} dv.
    """
    if min(lambda1, lambda2, lambda3) <= 0:
        raise ConfigError("rates must be positive")
    if not 0.0 < delta <= 1.0:
        raise ConfigError("the comparison degenerates at delta = 0; need delta in (0, 1]")
    mo_value = lambda3 / (lambda1 + lambda2 + lambda3)
    root = math.sqrt(delta * lambda1 * lambda2)
    x = (lambda1 + lambda2 + lambda3) / (2.0 * root)
    scaled_tail = integrate_semi_infinite(
        lambda v: math.exp(-v * v - 2.0 * x * v), tol=tol, decay_hint=2.0 * x
    )
    value = lambda3 / root * scaled_tail.value
    return value, mo_value


def gumbel_covariance_constant(
    lambda1: float, lambda2: float, lambda3: float, tol: float = DEFAULT_OP_TOL
) -> float:
    """Cov(tau_1, tau_2) for constant rates with delta = 1.

    Evaluates the two completed-square single integrals of the cross
    moment and subtracts the product of the marginal means 1/(l_i + l_3).
    """
    if min(lambda1, lambda2, lambda3) <= 0:
        raise ConfigError("rates must be positive")
    root = math.sqrt(lambda1 * lambda2)
    k = (lambda1 + lambda2 + lambda3) / root

    def reduced(offset: float) -> float:
        # (1/root) int_0^inf e^{-k v - v^2} / (offset + root v) dv
        res = integrate_semi_infinite(
            lambda v: math.exp(-k * v - v * v) / (offset + root * v),
            tol=tol,
            decay_hint=k,
        )
        return res.value / root

    cross = reduced(lambda2 + lambda3) + reduced(lambda1 + lambda3)
    return cross - 1.0 / ((lambda1 + lambda3) * (lambda2 + lambda3))


def neg_cov_condition(c1: float, c2: float) -> bool:
    """Sufficient condition 5 c1 c2 >= 4 (c1 + c2 + 1) for negative covariance.

    c_i are the idiosyncratic-to-common rate ratios lambda_i / lambda_3,
    with delta = 1.
    """
    return 5.0 * c1 * c2 >= 4.0 * (c1 + c2 + 1.0)


# ---------------------------------------------------------------------------
# complementary-error-function bound
# ---------------------------------------------------------------------------


def gaussian_tail(x: float, tol: float = 1e-14) -> float:
    """int_x^inf e^{-u^2} du by quadrature, stable for large x."""
    if x <= 0:
        raise ValueError("x must be positive")
    scaled = integrate_semi_infinite(
        lambda v: math.exp(-v * v - 2.0 * x * v), tol=tol, decay_hint=2.0 * x
    )
    return math.exp(-x * x) * scaled.value


def erfc_bound_h(x: float, ell: float, tol: float = 1e-14) -> float:
    """h(x, l) = 2x/(4x^2 + l) e^{-x^2} - int_x^inf e^{-u^2} du for x >= 1."""
    if x < 1.0:
        raise ValueError("the bound is studied on x >= 1")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    return 2.0 * x / (4.0 * x * x + ell) * math.exp(-x * x) - gaussian_tail(x, tol)


@dataclass(frozen=True)
class ErfcBoundReport:
    """Largest admissible l, the interior maximizer of h(., l), and feasibility."""

    ell: float
    x_star: float
    h_max: float
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "x_star": self.x_star,
            "h_max": self.h_max,
            "feasible": self.feasible,
        }


def _stationary_x(ell: float) -> float:
    """Maximizer of h(., ell) from the closed stationarity formula."""
    if ell >= 2.0:
        raise NumericError("stationarity formula needs ell < 2")
    return math.sqrt((ell * ell + 2.0 * ell) / (8.0 - 4.0 * ell))


def _golden_max(f, lo: float, hi: float, iters: int = 120) -> float:
    """Golden-section maximizer of a unimodal function on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        if b - a < 1e-12:
            break
    return 0.5 * (a + b)


def erfc_bound_optimize(
    ell: Optional[float] = None, grid_points: int = 2001
) -> ErfcBoundReport:
    """Locate the critical l with h(1, l) = 0, or audit a supplied l.

    The root is found by bisection on [0.5, 2] to 1e-10 (h is strictly
    decreasing in l).  The maximizer starts at the closed stationarity
    formula and is polished by golden-section search; feasibility checks
    h(x, l) >= -1e-12 on a dense grid of [1, 10].
    """
    if ell is None:
        lo, hi = 0.5, 2.0
        f_lo = erfc_bound_h(1.0, lo)
        f_hi = erfc_bound_h(1.0, hi)
        if not (f_lo > 0 > f_hi):
            raise NumericError("root of h(1, .) not bracketed by [0.5, 2]")
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if erfc_bound_h(1.0, mid) > 0.0:
                lo = mid
            else:
                hi = mid
        ell = 0.5 * (lo + hi)
    x_guess = _stationary_x(ell)
    x_star = _golden_max(
        lambda x: erfc_bound_h(x, ell), max(1.0, x_guess - 0.25), x_guess + 0.25
    )
    h_max = erfc_bound_h(x_star, ell)
    xs = np.linspace(1.0, 10.0, grid_points)
    feasible = all(erfc_bound_h(float(x), ell, tol=1e-12) >= -1e-12 for x in xs)
    return ErfcBoundReport(ell=ell, x_star=x_star, h_max=h_max, feasible=feasible)
