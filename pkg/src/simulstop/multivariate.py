"""n-component systems driven by subset shocks.

Each nonempty subset J of {1..n} may carry an intensity; a J-shock kills
every component in J simultaneously.  Component i dies at the first shock
hitting it, so

    P(tau_1 > s_1, ..., tau_n > s_n)
        = E[exp(-sum_J A_J(max_{i in J} s_i))],

and the probability that all n components die together integrates the
grand-shock rate against the survival of the minimum over every channel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .bivariate import (
    DEFAULT_OP_TOL,
    TAIL_LEVEL,
    BivariateScenario,
    ValueWithError,
)
from .errors import ConfigError, DefectiveDistributionWarning
from .intensity import (
    CompensatorCurve,
    IntensityModel,
    StatePath,
    SummedCompensator,
    validate_divergence,
)
from .quadrature import integrate_auto

__all__ = [
    "ShockSystem",
    "SubsetPattern",
    "pattern_system",
    "joint_survival_n",
    "prob_all_equal",
    "prob_all_equal_pattern",
    "pairwise_scenario",
]

MAX_COMPONENTS = 12
# beyond this many shock channels, scalar exponent sums switch to fsum
FSUM_THRESHOLD = 64


def _canonical(subset) -> tuple[int, ...]:
    members = tuple(sorted(set(int(i) for i in subset)))
    if not members:
        raise ConfigError("shock subsets must be nonempty")
    return members


@dataclass(frozen=True)
class ShockSystem:
    """Map from component subsets to shock intensities.

    Absent subsets carry zero intensity.  Keys are canonicalized to sorted
    1-indexed tuples; every component must appear in at least one shock.
    """

    n: int
    shocks: Mapping[tuple, IntensityModel]
    path: Optional[StatePath] = None
    path_ensemble: Optional[Sequence[StatePath]] = None

    def __post_init__(self):
        if not 2 <= self.n <= MAX_COMPONENTS:
            raise ConfigError(f"component count must be in [2, {MAX_COMPONENTS}], got {self.n}")
        canon: dict[tuple, IntensityModel] = {}
        for subset, model in self.shocks.items():
            key = _canonical(subset)
            if key[0] < 1 or key[-1] > self.n:
                raise ConfigError(f"subset {key} outside 1..{self.n}")
            if key in canon:
                raise ConfigError(f"duplicate shock subset {key}")
            canon[key] = model
        object.__setattr__(self, "shocks", dict(sorted(canon.items())))
        covered = set()
        for key in canon:
            covered.update(key)
        missing = set(range(1, self.n + 1)) - covered
        if missing:
            raise ConfigError(f"components {sorted(missing)} are hit by no shock")
        if self.is_path_driven and self.path is None and not self.path_ensemble:
            raise ConfigError("path-driven system requires a path or a path ensemble")
        for i in range(1, self.n + 1):
            curves = [
                CompensatorCurve(m, self._first_path())
                for key, m in self.shocks.items()
                if i in key
            ]
            diag = validate_divergence(SummedCompensator(curves))
            if not diag.divergent:
                warnings.warn(
                    f"total intensity hitting component {i} may not diverge "
                    f"({diag.message}); tau_{i} is defective",
                    DefectiveDistributionWarning,
                    stacklevel=2,
                )

    def _first_path(self) -> Optional[StatePath]:
        if self.path is not None:
            return self.path
        if self.path_ensemble:
            return self.path_ensemble[0]
        return None

    @property
    def is_path_driven(self) -> bool:
        return any(m.is_path_driven for m in self.shocks.values())

    @property
    def grand(self) -> tuple:
        return tuple(range(1, self.n + 1))

    def subsets(self) -> list[tuple]:
        return list(self.shocks.keys())

    def _kernel_paths(self) -> list[Optional[StatePath]]:
        if not self.is_path_driven or self.path is not None:
            return [self.path]
        return list(self.path_ensemble)

    def curves_for(self, path: Optional[StatePath]) -> dict[tuple, CompensatorCurve]:
        return {key: CompensatorCurve(m, path) for key, m in self.shocks.items()}


@dataclass(frozen=True)
class SubsetPattern:
    """Homogeneous rate assignment across subset sizes.

    ``fractional`` gives a size-k subset the rate base/k; ``multiplicative``
    gives it k*base.
    """

    kind: str
    base_rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fractional", "multiplicative"):
            raise ConfigError(f"unknown pattern kind {self.kind!r}")
        if self.base_rate <= 0:
            raise ConfigError("base_rate must be positive")

    def rate_for_size(self, k: int) -> float:
        return self.base_rate / k if self.kind == "fractional" else self.base_rate * k


def pattern_system(n: int, pattern: SubsetPattern) -> ShockSystem:
    """Explicit system carrying the pattern's rate on every nonempty subset."""
    from itertools import combinations

    shocks = {}
    for k in range(1, n + 1):
        for subset in combinations(range(1, n + 1), k):
            shocks[subset] = IntensityModel.constant(pattern.rate_for_size(k))
    return ShockSystem(n=n, shocks=shocks)


def _expect_system(sys: ShockSystem, per_path) -> ValueWithError:
    paths = sys._kernel_paths()
    if len(paths) == 1:
        v, e = per_path(paths[0])
        return ValueWithError(v, e)
    pairs = [per_path(p) for p in paths]
    vals = np.array([p[0] for p in pairs])
    n = len(paths)
    mean = float(np.sum(vals) / n)
    se = float(np.std(vals, ddof=1) / math.sqrt(n))
    return ValueWithError(mean, float(np.mean([p[1] for p in pairs])), ensemble_se=se, n_paths=n)


def joint_survival_n(
    sys: ShockSystem, s: Sequence[float], tol: float = DEFAULT_OP_TOL
) -> ValueWithError:
    """P(tau_1 > s_1, ..., tau_n > s_n)."""
    s = [float(v) for v in s]
    if len(s) != sys.n:
        raise ConfigError(f"expected {sys.n} times, got {len(s)}")
    if any(v < 0 for v in s):
        raise ValueError("times must be nonnegative")

    def per_path(path):
        curves = sys.curves_for(path)
        terms = [
            curves[key].compensator_at(max(s[i - 1] for i in key))
            for key in curves
        ]
        exponent = math.fsum(terms) if len(terms) > FSUM_THRESHOLD else sum(terms)
        return math.exp(-exponent), 0.0

    return _expect_system(sys, per_path)


def prob_all_equal(sys: ShockSystem, tol: float = DEFAULT_OP_TOL) -> ValueWithError:
    """P(tau_1 = ... = tau_n): grand-shock rate against all channels' survival."""
    grand = sys.grand
    if grand not in sys.shocks:
        return ValueWithError(0.0, 0.0)

    def per_path(path):
        curves = sys.curves_for(path)
        total = SummedCompensator(list(curves.values()))
        grand_curve = curves[grand]
        t_cut = total.time_to_level(TAIL_LEVEL)
        if math.isinf(t_cut):
            t_cut = 1e6
        hi = min(t_cut, total.horizon)
        tail = math.exp(-float(total.compensator_at(hi)))
        f = lambda xs: grand_curve.rate_at(xs) * np.exp(-total.compensator_at(xs))
        res = integrate_auto(f, 0.0, hi, tol, edges=path.grid if path is not None else None)
        return res.value, res.abs_error_estimate + tail

    return _expect_system(sys, per_path)


def prob_all_equal_pattern(n: int, pattern: SubsetPattern) -> float:
    """Closed form of :func:`prob_all_equal` for the homogeneous patterns.

    The multiplicative pattern collapses to 1 / 2^(n-1); the fractional one
    to (1/n) / sum_k C(n,k)/k.  Both are rate-free.
    """
    if not 2 <= n <= MAX_COMPONENTS:
        raise ConfigError(f"component count must be in [2, {MAX_COMPONENTS}], got {n}")
    if pattern.kind == "multiplicative":
        return 1.0 / 2.0 ** (n - 1)
    denom = math.fsum(math.comb(n, k) / k for k in range(1, n + 1))
    return (1.0 / n) / denom


def _aggregate(parts: list[IntensityModel]) -> IntensityModel:
    """Pointwise sum of intensity models (constants stay constant)."""
    if not parts:
        return IntensityModel.constant(0.0)
    resolved = [m._resolve() for m in parts]
    if all(shape is None for _, shape in resolved):
        return IntensityModel.constant(math.fsum(scale for scale, _ in resolved))

    def summed(x: float) -> float:
        return math.fsum(
            scale * (shape(x) if shape is not None else 1.0) for scale, shape in resolved
        )

    return IntensityModel.path_driven(summed)


def pairwise_scenario(sys: ShockSystem, i: int, j: int) -> BivariateScenario:
    """Marginalize the system to components (i, j).

    Shocks hitting only i, only j, and both aggregate by superposition into
    the three channels of a two-component scenario.
    """
    if not (1 <= i <= sys.n and 1 <= j <= sys.n) or i == j:
        raise ConfigError(f"invalid component pair ({i}, {j})")
    only_i, only_j, both = [], [], []
    for key, model in sys.shocks.items():
        hit_i = i in key
        hit_j = j in key
        if hit_i and hit_j:
            both.append(model)
        elif hit_i:
            only_i.append(model)
        elif hit_j:
            only_j.append(model)
    return BivariateScenario(
        alpha1=_aggregate(only_i),
        alpha2=_aggregate(only_j),
        alpha3=_aggregate(both),
        path=sys.path,
        path_ensemble=sys.path_ensemble,
    )
