"""Closed-form vs Monte Carlo cross-validation batteries.

Each battery draws one seeded batch from the scenario's exact sampler and
compares every applicable closed form against its empirical counterpart.
Monte Carlo rows pass when |z| <= 3; identity rows pass when the
discrepancy stays within the stated tolerance (reported as z = diff/tol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bivariate as bv
from . import gumbel as gb
from . import multivariate as mv
from .errors import ConfigError, InfiniteMomentError
from .montecarlo import (
    RngSpec,
    sample_gumbel_pairs,
    sample_mo_pairs,
    sample_systems,
)

__all__ = ["CheckRow", "ValidationReport", "validate_scenario"]

Z_LIMIT = 3.0


@dataclass(frozen=True)
class CheckRow:
    name: str
    closed_form: float
    mc_mean: float
    mc_se: float
    z_score: float
    passed: bool
    kind: str = "mc"  # "mc" or "identity"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "closed_form": self.closed_form,
            "mc_mean": self.mc_mean,
            "mc_se": self.mc_se,
            "z_score": self.z_score,
            "pass": self.passed,
            "kind": self.kind,
        }


@dataclass
class ValidationReport:
    model: str
    samples: int
    seed: int
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "samples": self.samples,
            "seed": self.seed,
            "pass": self.passed,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_table(self) -> str:
        header = f"{'check':34s} {'closed form':>14s} {'mc mean':>14s} {'mc se':>12s} {'z':>8s}  result"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.name:34s} {r.closed_form:14.6g} {r.mc_mean:14.6g} "
                f"{r.mc_se:12.3g} {r.z_score:8.2f}  {'pass' if r.passed else 'FAIL'}"
            )
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _mc_row(name: str, closed: float, values: np.ndarray, corrupt: dict) -> CheckRow:
    closed = closed + corrupt.get(name, 0.0)
    mean = float(np.sum(values) / values.size)
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    if se == 0.0:
        z = 0.0 if mean == closed else math.inf
    else:
        z = (mean - closed) / se
    return CheckRow(name, closed, mean, se, z, abs(z) <= Z_LIMIT)


def _freq_row(name: str, closed: float, flags: np.ndarray, corrupt: dict) -> CheckRow:
    return _mc_row(name, closed, flags.astype(float), corrupt)


def _conditional_row(
    name: str, closed: float, event: np.ndarray, given: np.ndarray, corrupt: dict
) -> Optional[CheckRow]:
    m = int(np.count_nonzero(given))
    if m == 0:
        return None
    closed = closed + corrupt.get(name, 0.0)
    p = float(np.count_nonzero(event & given)) / m
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / m)
    z = (p - closed) / se
    return CheckRow(name, closed, p, se, z, abs(z) <= Z_LIMIT)


def _identity_row(name: str, lhs: float, rhs: float, tol: float, corrupt: dict) -> CheckRow:
    lhs = lhs + corrupt.get(name, 0.0)
    diff = abs(lhs - rhs)
    z = diff / tol
    return CheckRow(name, lhs, rhs, tol, z, z <= 1.0, kind="identity")


def _sign_row(name: str, closed: float, mean: float, se: float, corrupt: dict) -> CheckRow:
    """Passes when both the closed form and the MC 3-sigma band are negative."""
    closed = closed + corrupt.get(name, 0.0)
    ok = closed < 0.0 and mean + Z_LIMIT * se < 0.0
    z = mean / se if se > 0 else 0.0
    return CheckRow(name, closed, mean, se, z, ok)


def _pair_battery(
    report: ValidationReport,
    sc: bv.BivariateScenario,
    batch,
    survival_fn,
    prob_equal_value: float,
    corrupt: dict,
) -> None:
    """Rows shared by the plain and Gumbel pair models."""
    tau1, tau2, equal = batch.tau1, batch.tau2, batch.equal
    s_ref = float(np.quantile(tau1, 0.5))
    t_ref = float(np.quantile(tau2, 0.5))
    rows = report.rows

    rows.append(_freq_row("prob_equal", prob_equal_value, equal, corrupt))
    rows.append(
        _freq_row(
            f"joint_survival({s_ref:.3g},{t_ref:.3g})",
            survival_fn(s_ref, t_ref),
            (tau1 > s_ref) & (tau2 > t_ref),
            corrupt,
        )
    )
    rows.append(
        _freq_row(
            f"marginal_survival(1,{s_ref:.3g})",
            float(bv.marginal_survival(sc, 1, s_ref)),
            tau1 > s_ref,
            corrupt,
        )
    )
    rows.append(
        _freq_row(
            f"marginal_survival(2,{t_ref:.3g})",
            float(bv.marginal_survival(sc, 2, t_ref)),
            tau2 > t_ref,
            corrupt,
        )
    )
    rows.append(
        _identity_row(
            "joint(s,0) == marginal_1(s)",
            survival_fn(s_ref, 0.0),
            float(bv.marginal_survival(sc, 1, s_ref)),
            1e-12,
            corrupt,
        )
    )


def validate_bivariate(
    sc: bv.BivariateScenario,
    samples: int,
    seed: int,
    corrupt: Optional[dict] = None,
) -> ValidationReport:
    corrupt = corrupt or {}
    report = ValidationReport(model="bivariate", samples=samples, seed=seed)
    rng = RngSpec(seed)
    batch = sample_mo_pairs(sc, rng, samples)
    tau1, tau2, equal = batch.tau1, batch.tau2, batch.equal
    pe = float(bv.prob_equal(sc))
    _pair_battery(report, sc, batch, lambda s, t: float(bv.joint_survival(sc, s, t)), pe, corrupt)
    rows = report.rows

    eps_ref = float(np.quantile(np.abs(tau1 - tau2), 0.5))
    if eps_ref > 0:
        rows.append(
            _freq_row(
                f"prob_within_eps({eps_ref:.3g})",
                float(bv.prob_within_eps(sc, eps_ref)),
                np.abs(tau1 - tau2) <= eps_ref,
                corrupt,
            )
        )
    t_hi = float(np.quantile(np.maximum(tau1, tau2), 0.75))
    s_lo = float(np.quantile(np.minimum(tau1, tau2), 0.25))
    if s_lo < t_hi:
        rows.append(
            _freq_row(
                f"quadrant_prob({s_lo:.3g},{t_hi:.3g})",
                float(bv.quadrant_prob(sc, s_lo, t_hi)),
                (tau1 > s_lo) & (tau1 <= t_hi) & (tau2 > s_lo) & (tau2 <= t_hi),
                corrupt,
            )
        )
    t_ref = float(np.quantile(tau1, 0.6))
    rows.append(
        _freq_row(
            f"prob_equal_and_before({t_ref:.3g})",
            float(bv.prob_equal_and_before(sc, t_ref)),
            equal & (tau1 <= t_ref),
            corrupt,
        )
    )
    row = _conditional_row(
        f"prob_equal_given_tau1_before({t_ref:.3g})",
        float(bv.prob_equal_given_tau1_before(sc, t_ref)),
        equal,
        tau1 <= t_ref,
        corrupt,
    )
    if row:
        rows.append(row)
    row = _conditional_row(
        f"prob_equal_given_both_before({t_ref:.3g})",
        float(bv.prob_equal_given_both_before(sc, t_ref)),
        equal,
        (tau1 <= t_ref) & (tau2 <= t_ref),
        corrupt,
    )
    if row:
        rows.append(row)
    try:
        l2 = float(bv.l2_distance_sq(sc))
        rows.append(_mc_row("l2_distance_sq", l2, (tau1 - tau2) ** 2, corrupt))
        cov = float(bv.covariance(sc))
        w = (tau1 - tau1.mean()) * (tau2 - tau2.mean())
        rows.append(_mc_row("covariance", cov, w, corrupt))
    except InfiniteMomentError:
        pass
    rows.append(
        _identity_row("prob_within_eps(0) == prob_equal", float(bv.prob_within_eps(sc, 0.0)), pe, 1e-10, corrupt)
    )
    return report


def validate_gumbel(
    gs: gb.GumbelScenario,
    samples: int,
    seed: int,
    corrupt: Optional[dict] = None,
) -> ValidationReport:
    corrupt = corrupt or {}
    report = ValidationReport(model="gumbel", samples=samples, seed=seed)
    rng = RngSpec(seed)
    batch = sample_gumbel_pairs(gs, rng, samples)
    pe = float(gb.gumbel_prob_equal(gs))
    _pair_battery(
        report,
        gs.base,
        batch,
        lambda s, t: float(gb.gumbel_joint_survival(gs, s, t)),
        pe,
        corrupt,
    )
    rows = report.rows
    if gs.delta == 0.0:
        rows.append(
            _identity_row(
                "delta=0 reduces to common-shock model",
                pe,
                float(bv.prob_equal(gs.base)),
                1e-12,
                corrupt,
            )
        )
    elif not gs.base.is_path_driven:
        r1, r2, r3 = gs.base.constant_rates()
        value, mo_value = gb.gumbel_prob_equal_dominated(r1, r2, r3, gs.delta)
        rows.append(
            _identity_row("prob_equal dominated by delta=0 value", max(0.0, value - mo_value), 0.0, 1e-12, corrupt)
        )
        if gs.delta == 1.0:
            cov = gb.gumbel_covariance_constant(r1, r2, r3)
            tau1, tau2 = batch.tau1, batch.tau2
            w = (tau1 - tau1.mean()) * (tau2 - tau2.mean())
            rows.append(_mc_row("covariance", cov, w, corrupt))
            if gb.neg_cov_condition(r1 / r3, r2 / r3):
                se = float(np.std(w, ddof=1) / math.sqrt(w.size))
                rows.append(_sign_row("covariance negative", cov, float(np.mean(w)), se, corrupt))
    return report


def validate_system(
    sys: mv.ShockSystem,
    samples: int,
    seed: int,
    corrupt: Optional[dict] = None,
    pattern: Optional[mv.SubsetPattern] = None,
) -> ValidationReport:
    corrupt = corrupt or {}
    report = ValidationReport(model="system", samples=samples, seed=seed)
    rng = RngSpec(seed)
    batch = sample_systems(sys, rng, samples)
    rows = report.rows
    rows.append(
        _freq_row("prob_all_equal", float(mv.prob_all_equal(sys)), batch.all_equal, corrupt)
    )
    q = float(np.quantile(batch.taus, 0.5))
    rows.append(
        _freq_row(
            f"joint_survival_n({q:.3g},...)",
            float(mv.joint_survival_n(sys, [q] * sys.n)),
            np.all(batch.taus > q, axis=1),
            corrupt,
        )
    )
    pairs = [(i, j) for i in range(1, sys.n + 1) for j in range(i + 1, sys.n + 1)]
    for i, j in pairs[:6]:
        pair_sc = mv.pairwise_scenario(sys, i, j)
        same = batch.cause_subset[:, i - 1] == batch.cause_subset[:, j - 1]
        rows.append(
            _freq_row(f"pairwise_equal({i},{j})", float(bv.prob_equal(pair_sc)), same, corrupt)
        )
    if pattern is not None:
        rows.append(
            _identity_row(
                f"pattern closed form (n={sys.n})",
                float(mv.prob_all_equal(sys)),
                mv.prob_all_equal_pattern(sys.n, pattern),
                1e-9,
                corrupt,
            )
        )
    return report


def validate_scenario(
    model_obj,
    samples: int,
    seed: int,
    corrupt: Optional[dict] = None,
    pattern: Optional[mv.SubsetPattern] = None,
) -> ValidationReport:
    """Dispatch to the battery matching the scenario type."""
    if samples < 10_000:
        raise ConfigError("validation needs at least 10^4 samples")
    if isinstance(model_obj, gb.GumbelScenario):
        return validate_gumbel(model_obj, samples, seed, corrupt)
    if isinstance(model_obj, bv.BivariateScenario):
        if model_obj.path_ensemble:
            raise ConfigError(
                "the validation battery needs a fixed path; ensemble scenarios "
                "validate per path"
            )
        return validate_bivariate(model_obj, samples, seed, corrupt)
    if isinstance(model_obj, mv.ShockSystem):
        return validate_system(model_obj, samples, seed, corrupt, pattern)
    raise ConfigError(f"cannot validate object of type {type(model_obj).__name__}")
