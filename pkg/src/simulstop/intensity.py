"""Intensity models, state paths, and cumulative hazard (compensator) curves.

An intensity model is one of

* ``constant`` -- fixed nonnegative rate,
* ``proportional`` -- a positive multiple of another model,
* ``path_driven`` -- a nonnegative rate read off a scalar state path
  through a shape function.

A :class:`CompensatorCurve` pairs a model with a path (when one is
needed) and exposes the rate r(s) and its running integral A(s).  For
path-driven models the rate curve is the declared interpolation of the
rates sampled at the path grid, and A is the exact integral of that
interpolated curve, so ``rate_at`` and ``compensator_at`` are consistent
to machine precision: A'(s) = rate(s) everywhere.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, HorizonExceededError

__all__ = [
    "IntensityModel",
    "StatePath",
    "CompensatorCurve",
    "SummedCompensator",
    "DivergenceDiagnostic",
    "compensator_at",
    "simulate_ou_path",
    "validate_divergence",
]


@dataclass(frozen=True)
class IntensityModel:
    """A nonnegative rate function: constant, proportional, or path-driven.

    Use the classmethod constructors; the raw constructor is not meant to
    be called directly.
    """

    kind: str
    rate: Optional[float] = None
    base: Optional["IntensityModel"] = None
    factor: Optional[float] = None
    shape: Optional[Callable[[float], float]] = None

    @classmethod
    def constant(cls, rate: float) -> "IntensityModel":
        if rate < 0 or not math.isfinite(rate):
            raise ConfigError(f"constant rate must be finite and >= 0, got {rate}")
        return cls(kind="constant", rate=float(rate))

    @classmethod
    def proportional(cls, base: "IntensityModel", factor: float) -> "IntensityModel":
        if factor <= 0 or not math.isfinite(factor):
            raise ConfigError(f"proportional factor must be finite and > 0, got {factor}")
        return cls(kind="proportional", base=base, factor=float(factor))

    @classmethod
    def path_driven(cls, shape: Callable[[float], float]) -> "IntensityModel":
        return cls(kind="path_driven", shape=shape)

    @property
    def is_path_driven(self) -> bool:
        if self.kind == "path_driven":
            return True
        if self.kind == "proportional":
            return self.base.is_path_driven
        return False

    def _resolve(self) -> tuple[float, Optional[Callable[[float], float]]]:
        """Collapse proportional chains to (scale, shape-or-None)."""
        if self.kind == "constant":
            return self.rate, None
        if self.kind == "path_driven":
            return 1.0, self.shape
        scale, shape = self.base._resolve()
        return self.factor * scale, shape

    @property
    def constant_rate(self) -> float:
        """Effective rate for models that do not depend on a path."""
        scale, shape = self._resolve()
        if shape is not None:
            raise ConfigError("path-driven model has no constant rate")
        return scale


_INTERPOLATIONS = ("linear", "const-left")


@dataclass(frozen=True)
class StatePath:
    """A discretized scalar trajectory of the background process.

    ``grid`` must start at 0 and increase strictly; ``interpolation``
    selects piecewise-linear (default) or piecewise-constant-left
    reconstruction between grid points.
    """

    grid: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or values.ndim != 1 or grid.shape != values.shape:
            raise ConfigError("grid and values must be 1-D arrays of equal length")
        if grid.size < 2:
            raise ConfigError("a path needs at least two grid points")
        if grid[0] != 0.0:
            raise ConfigError("path grid must start at 0")
        if not np.all(np.diff(grid) > 0):
            raise ConfigError("path grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ConfigError("path values must be finite")
        if self.interpolation not in _INTERPOLATIONS:
            raise ConfigError(f"unknown interpolation {self.interpolation!r}")

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def is_identity(self) -> bool:
        """True when the path is X_t = t on its grid."""
        return bool(np.allclose(self.values, self.grid, rtol=0.0, atol=1e-12))

    def value_at(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon + 1e-12):
            raise HorizonExceededError(
                f"time outside path horizon [0, {self.horizon}]"
            )
        if self.interpolation == "linear":
            out = np.interp(t_arr, self.grid, self.values)
        else:
            idx = np.clip(np.searchsorted(self.grid, t_arr, side="right") - 1, 0, self.grid.size - 1)
            out = self.values[idx]
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    @classmethod
    def identity(cls, horizon: float, step: float) -> "StatePath":
        """The deterministic path X_t = t sampled with the given step."""
        if step <= 0 or horizon <= 0 or step > horizon:
            raise ConfigError("need 0 < step <= horizon")
        n = max(1, int(round(horizon / step)))
        grid = np.linspace(0.0, horizon, n + 1)
        return cls(grid=grid, values=grid.copy())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "value"])
            for t, x in zip(self.grid, self.values):
                writer.writerow([f"{t:.17g}", f"{x:.17g}"])

    @classmethod
    def from_csv(cls, path, interpolation: str = "linear") -> "StatePath":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["time", "value"]:
                raise ConfigError(f"{path}: expected header 'time,value'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        if not rows:
            raise ConfigError(f"{path}: no data rows")
        grid = np.array([r[0] for r in rows])
        values = np.array([r[1] for r in rows])
        return cls(grid=grid, values=values, interpolation=interpolation)


class CompensatorCurve:
    """Rate r(s) and cumulative hazard A(s) = int_0^s r(u) du for one model.

    Constant and proportional-of-constant models have an infinite horizon
    and exact affine compensators.  Path-driven models are defined on the
    path's grid; queries beyond the horizon raise
    :class:`HorizonExceededError`.
    """

    def __init__(self, model: IntensityModel, path: Optional[StatePath] = None):
        self.model = model
        self.path = path
        scale, shape = model._resolve()
        if shape is None:
            self._rate = scale
            self._nodes = None
            return
        if path is None:
            raise ConfigError("path-driven model requires a state path")
        rates = scale * np.array([shape(x) for x in path.values], dtype=float)
        if np.any(~np.isfinite(rates)) or np.any(rates < 0):
            raise ConfigError("shape produced a negative or non-finite rate")
        self._rate = None
        self._nodes = path.grid
        self._node_rates = rates
        dt = np.diff(path.grid)
        if path.interpolation == "linear":
            seg = 0.5 * (rates[:-1] + rates[1:]) * dt
        else:
            seg = rates[:-1] * dt
        self._cum = np.concatenate(([0.0], np.cumsum(seg)))

    # -- basic queries ----------------------------------------------------

    @property
    def is_constant(self) -> bool:
        return self._nodes is None

    @property
    def horizon(self) -> float:
        return math.inf if self._nodes is None else float(self._nodes[-1])

    @property
    def total(self) -> float:
        """A at the horizon (infinite for divergent constant models)."""
        if self._nodes is None:
            return math.inf if self._rate > 0 else 0.0
        return float(self._cum[-1])

    def _check_horizon(self, s_arr: np.ndarray) -> None:
        if np.any(s_arr < 0):
            raise ValueError("time must be nonnegative")
        if self._nodes is not None and np.any(s_arr > self._nodes[-1] + 1e-12):
            raise HorizonExceededError(
                f"time beyond path horizon {self._nodes[-1]}"
            )

    def rate_at(self, s):
        s_arr = np.asarray(s, dtype=float)
        self._check_horizon(s_arr)
        if self._nodes is None:
            out = np.full_like(s_arr, self._rate, dtype=float)
        elif self.path.interpolation == "linear":
            out = np.interp(s_arr, self._nodes, self._node_rates)
        else:
            idx = np.clip(
                np.searchsorted(self._nodes, s_arr, side="right") - 1,
                0,
                self._nodes.size - 1,
            )
            out = self._node_rates[idx]
        return float(out) if s_arr.ndim == 0 else out

    def compensator_at(self, s):
        s_arr = np.asarray(s, dtype=float)
        self._check_horizon(s_arr)
        if self._nodes is None:
            out = self._rate * s_arr
        else:
            s_clipped = np.minimum(s_arr, self._nodes[-1])
            idx = np.clip(
                np.searchsorted(self._nodes, s_clipped, side="right") - 1,
                0,
                self._nodes.size - 2,
            )
            theta = s_clipped - self._nodes[idx]
            g0 = self._node_rates[idx]
            if self.path.interpolation == "linear":
                dt = self._nodes[idx + 1] - self._nodes[idx]
                slope = (self._node_rates[idx + 1] - g0) / dt
                out = self._cum[idx] + g0 * theta + 0.5 * slope * theta * theta
            else:
                out = self._cum[idx] + g0 * theta
        return float(out) if s_arr.ndim == 0 else out

    # -- inversion (first passage of A over a level) ----------------------

    def inverse(self, z: float) -> float:
        """First time s with A(s) >= z; exact for constant models."""
        if z < 0:
            raise ValueError("level must be nonnegative")
        if z == 0:
            return 0.0
        if self._nodes is None:
            return z / self._rate if self._rate > 0 else math.inf
        if z > self._cum[-1]:
            raise HorizonExceededError(
                f"level {z} beyond A(horizon) = {self._cum[-1]}"
            )
        return float(self.inverse_array(np.array([z]))[0])

    def inverse_array(self, z: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`inverse`; bisection within the bracketing segment."""
        z = np.asarray(z, dtype=float)
        if self._nodes is None:
            if self._rate > 0:
                return z / self._rate
            return np.where(z <= 0, 0.0, math.inf)
        if np.any(z > self._cum[-1]):
            raise HorizonExceededError("level beyond A(horizon)")
        # segment whose [cum[k], cum[k+1]] brackets z, skipping flat spans
        k = np.clip(np.searchsorted(self._cum, z, side="left") - 1, 0, self._cum.size - 2)
        lo = self._nodes[k]
        hi = self._nodes[k + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self.compensator_at(mid) < z
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-12:
                break
        return 0.5 * (lo + hi)

    def time_to_level(self, level: float) -> float:
        """First time A reaches ``level``, capped at the horizon."""
        if level <= 0:
            return 0.0
        if self._nodes is None:
            if self._rate > 0:
                return level / self._rate
            return math.inf
        if level >= self._cum[-1]:
            return self.horizon
        return self.inverse(level)


class SummedCompensator:
    """Pointwise sum of several compensator curves.

    Scalar evaluations use compensated summation so that reduction
    identities hold tightly even with many terms.
    """

    def __init__(self, curves: Sequence[CompensatorCurve]):
        if not curves:
            raise ConfigError("need at least one curve")
        self.curves = list(curves)

    @property
    def horizon(self) -> float:
        return min(c.horizon for c in self.curves)

    @property
    def total(self) -> float:
        return math.fsum(c.total for c in self.curves) if all(
            math.isfinite(c.total) for c in self.curves
        ) else math.inf

    def compensator_at(self, s):
        if np.isscalar(s):
            return math.fsum(c.compensator_at(s) for c in self.curves)
        return np.sum([c.compensator_at(s) for c in self.curves], axis=0)

    def rate_at(self, s):
        if np.isscalar(s):
            return math.fsum(c.rate_at(s) for c in self.curves)
        return np.sum([c.rate_at(s) for c in self.curves], axis=0)

    def time_to_level(self, level: float) -> float:
        """First time the summed compensator reaches ``level`` (capped at horizon)."""
        if level <= 0:
            return 0.0
        hor = self.horizon
        if math.isinf(hor):
            # all-constant: exact
            rate = math.fsum(c._rate for c in self.curves)
            return level / rate if rate > 0 else math.inf
        if self.compensator_at(hor) <= level:
            return hor
        lo, hi = 0.0, hor
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.compensator_at(mid) < level:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        return 0.5 * (lo + hi)


def compensator_at(curve: CompensatorCurve, s: float) -> float:
    """A(s) for the given curve; exact affine value for constant models."""
    return curve.compensator_at(s)


def simulate_ou_path(
    theta: float,
    mu: float,
    sigma: float,
    x0: float,
    horizon: float,
    dt: float,
    seed: int,
) -> StatePath:
    """Euler-Maruyama discretization of dX = theta (mu - X) dt + sigma dW.

    Deterministic for a fixed seed.  The actual step is horizon/n with
    n = round(horizon/dt) so the grid lands exactly on the horizon.
    """
    if dt <= 0 or horizon <= 0 or dt > horizon:
        raise ConfigError("need 0 < dt <= horizon")
    n = max(1, int(round(horizon / dt)))
    h = horizon / n
    grid = np.linspace(0.0, horizon, n + 1)
    values = np.empty(n + 1)
    values[0] = x0
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n) * (sigma * math.sqrt(h))
    for k in range(n):
        values[k + 1] = values[k] + theta * (mu - values[k]) * h + noise[k]
    return StatePath(grid=grid, values=values)


@dataclass(frozen=True)
class DivergenceDiagnostic:
    """Outcome of checking lim A(s) = infinity on the available horizon."""

    divergent: bool
    flags: tuple = ()
    total: float = math.inf
    tail_growth_rate: Optional[float] = None

    @property
    def message(self) -> str:
        return "ok" if self.divergent else "; ".join(self.flags) or "non-divergent"


def validate_divergence(
    curve: Union[CompensatorCurve, SummedCompensator]
) -> DivergenceDiagnostic:
    """Check that the compensator grows without bound.

    Constant-rate models (infinite horizon) pass iff the rate is positive.
    Path-driven models are judged on the observable horizon: a near-zero
    tail rate or a tiny accumulated total is flagged.  Accepts a single
    curve or a :class:`SummedCompensator`.
    """
    hor = curve.horizon
    if math.isinf(hor):
        r = float(curve.rate_at(0.0))
        if r > 0:
            return DivergenceDiagnostic(True, total=math.inf, tail_growth_rate=r)
        return DivergenceDiagnostic(False, ("non-divergent",), total=0.0, tail_growth_rate=0.0)
    total = float(curve.compensator_at(hor))
    half = float(curve.compensator_at(hor / 2.0))
    tail_rate = (total - half) / (hor / 2.0)
    flags = []
    if tail_rate <= 1e-12 * max(1.0, total):
        flags.append("near-zero-tail")
    if total < 1.0:
        flags.append("small-total")
    return DivergenceDiagnostic(not flags, tuple(flags), total=total, tail_growth_rate=tail_rate)
