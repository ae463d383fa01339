"""Acceptance gate: every criterion at its stated tolerance.

One test per criterion (criterion 12 split into its four assertions so an
isolated failure stays isolated); each records a PASS/FAIL line printed in
the terminal summary.  Monte Carlo checks run at the stated sample sizes
with fixed seeds.
"""

import json
import math
import time

import numpy as np
import pytest

from simulstop.bivariate import (
    BivariateScenario,
    BoundSpec,
    decompose,
    joint_hazard_ratio,
    joint_survival,
    l2_distance_sq,
    prob_equal,
    prob_equal_and_before,
    prob_equal_bounds,
    prob_equal_given_both_before,
    prob_equal_given_tau1_before,
    prob_within_eps,
)
from simulstop.cli import main
from simulstop.gumbel import (
    GumbelScenario,
    erfc_bound_h,
    erfc_bound_optimize,
    gumbel_covariance_constant,
    gumbel_joint_survival,
    gumbel_prob_equal,
)
from simulstop.intensity import IntensityModel, StatePath
from simulstop.montecarlo import (
    RngSpec,
    sample_gumbel_pairs,
    sample_mo_pairs,
    sample_systems,
)
from simulstop.multivariate import (
    SubsetPattern,
    pattern_system,
    prob_all_equal,
    prob_all_equal_pattern,
)

RESULTS: list = []


def record(number: str, name: str, ok: bool, detail: str = ""):
    RESULTS.append((number, name, bool(ok), detail))
    assert ok, f"criterion {number} ({name}): {detail}"


def binomial_ok(freq: float, target: float, n: int) -> bool:
    se = math.sqrt(max(freq * (1 - freq), 1e-12) / n)
    return abs(freq - target) <= 3 * se


def identity_path(horizon=15.0, step=1e-3):
    grid = np.linspace(0.0, horizon, int(round(horizon / step)) + 1)
    return StatePath(grid=grid, values=grid.copy())


def test_c01_same_intensity_identity():
    start = time.time()
    ok = True
    details = []
    for i, alpha in enumerate((0.5, 1.0, 3.0)):
        sc = BivariateScenario.from_constants(alpha, alpha, alpha)
        quad = float(prob_equal(sc))
        if abs(quad - 1 / 3) > 1e-10:
            ok = False
            details.append(f"quadrature off at alpha={alpha}: {quad}")
        batch = sample_mo_pairs(sc, RngSpec(42 + i), 10**6)
        freq = float(batch.equal.mean())
        if not binomial_ok(freq, 1 / 3, 10**6):
            ok = False
            details.append(f"MC off at alpha={alpha}: {freq}")
    elapsed = time.time() - start
    if elapsed >= 10.0:
        ok = False
        details.append(f"runtime {elapsed:.1f}s >= 10s")
    record("1", "same-intensity probability is 1/3", ok, "; ".join(details) or f"{elapsed:.1f}s")


def test_c02_constant_formula_grid():
    worst = 0.0
    for a1 in (0.5, 1.0, 2.0):
        for a2 in (0.5, 1.0, 2.0):
            for a3 in (0.5, 1.0, 2.0):
                sc = BivariateScenario.from_constants(a1, a2, a3)
                err = abs(float(prob_equal(sc)) - a3 / (a1 + a2 + a3))
                worst = max(worst, err)
    record("2", "constant-rate formula on 27-point grid", worst <= 1e-10, f"worst {worst:.2e}")


def test_c03_proportional_formula_with_curved_base():
    path = identity_path()
    base = IntensityModel.path_driven(lambda x: 1.0 + math.sin(x) ** 2)
    worst = 0.0
    for a1 in (0.5, 1.0, 2.0):
        for a2 in (0.5, 1.0, 2.0):
            sc = BivariateScenario(
                IntensityModel.proportional(base, a1),
                IntensityModel.proportional(base, a2),
                base,
                path=path,
            )
            err = abs(float(prob_equal(sc)) - 1.0 / (a1 + a2 + 1.0))
            worst = max(worst, err)
    record("3", "proportional formula with curved base rate", worst <= 1e-10, f"worst {worst:.2e}")


def test_c04_decomposition_reconstruction():
    sc = BivariateScenario.from_constants(2, 3, 5)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        s, t = rng.uniform(0.0, 2.0, size=2)
        d = decompose(sc, s, t)
        recon = d.beta * d.f_aa_value + (1 - d.beta) * d.f_sing_value
        worst = max(worst, abs(recon - float(joint_survival(sc, s, t))))
    ok = worst <= 1e-8
    h = 1e-3
    worst_mixed = 0.0
    for _ in range(25):
        s, t = rng.uniform(0.0, 2.0, size=2)
        if abs(s - t) < 3 * h:
            continue

        def g(a, b):
            d = decompose(sc, a, b)
            return (1 - d.beta) * d.f_sing_value

        mixed = abs(g(s + h, t + h) - g(s + h, t) - g(s, t + h) + g(s, t)) / (h * h)
        worst_mixed = max(worst_mixed, mixed)
    ok = ok and worst_mixed <= 1e-6
    record(
        "4",
        "decomposition reconstructs the survival; singular part flat off-diagonal",
        ok,
        f"recon {worst:.2e}, mixed {worst_mixed:.2e}",
    )


def _bounded_intensity_scenario(rng):
    lo = rng.uniform(0.2, 1.0, size=3)
    hi = lo + rng.uniform(0.2, 1.0, size=3)
    omega = rng.uniform(0.5, 3.0, size=3)
    phase = rng.uniform(0, math.pi, size=3)
    beta = lambda x: 1.0 + math.sin(x) ** 2

    def shape(i):
        return lambda x: (lo[i] + (hi[i] - lo[i]) * math.sin(omega[i] * x + phase[i]) ** 2) * beta(x)

    sc = BivariateScenario(
        IntensityModel.path_driven(shape(0)),
        IntensityModel.path_driven(shape(1)),
        IntensityModel.path_driven(shape(2)),
        path=identity_path(20.0, 2e-3),
    )
    return sc, BoundSpec.bounded_intensity(*lo, *hi, beta_shape=beta)


def _bounded_sum_compensators_scenario(rng):
    # idiosyncratic compensators saturate at b1 + b2 < u; the common channel
    # stays off until their sum has crossed the lower bound
    lo = rng.uniform(0.3, 0.8)
    hi = lo + rng.uniform(0.3, 0.8)
    total = rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
    b1 = total * rng.uniform(0.3, 0.7)
    b2 = total - b1
    c3 = rng.uniform(0.5, 2.0)
    s_lo = -math.log(1.0 - lo / total)

    sc = BivariateScenario(
        IntensityModel.path_driven(lambda x, b=b1: b * math.exp(-x)),
        IntensityModel.path_driven(lambda x, b=b2: b * math.exp(-x)),
        IntensityModel.path_driven(lambda x, s0=s_lo, c=c3: c if x >= s0 else 0.0),
        path=identity_path(80.0, 5e-3),
    )
    return sc, BoundSpec.bounded_sum_compensators(lo, hi)


def _compensator_ratio_scenario(rng):
    lo = rng.uniform(0.5, 1.5)
    hi = lo + rng.uniform(0.2, 1.0)
    total = rng.uniform(lo, hi)
    a1 = total * rng.uniform(0.2, 0.8)
    a2 = total - a1
    base = IntensityModel.path_driven(lambda x: 0.7 + 0.5 * math.cos(x) ** 2)
    sc = BivariateScenario(
        IntensityModel.proportional(base, a1),
        IntensityModel.proportional(base, a2),
        base,
        path=identity_path(60.0, 5e-3),
    )
    return sc, BoundSpec.compensator_ratio(lo, hi)


def _intensity_vs_sum_scenario(rng):
    lo = rng.uniform(0.3, 0.8)
    hi = min(lo + rng.uniform(0.1, 0.8), lo + 0.95)
    r1, r2 = rng.uniform(0.4, 2.0, size=2)
    omega = rng.uniform(0.5, 2.0)
    shape = lambda x: (r1 + r2) * (lo + (hi - lo) * math.sin(omega * x) ** 2)
    sc = BivariateScenario(
        IntensityModel.constant(r1),
        IntensityModel.constant(r2),
        IntensityModel.path_driven(shape),
        path=identity_path(40.0, 2e-3),
    )
    return sc, BoundSpec.intensity_vs_sum(lo, hi)


def test_c05_bounds_sandwich():
    import warnings

    rng = np.random.default_rng(5)
    builders = {
        "bounded_intensity": _bounded_intensity_scenario,
        "bounded_sum_compensators": _bounded_sum_compensators_scenario,
        "compensator_ratio": _compensator_ratio_scenario,
        "intensity_vs_sum": _intensity_vs_sum_scenario,
    }
    failures = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for kind, build in builders.items():
            for i in range(20):
                sc, spec = build(rng)
                lo, hi = prob_equal_bounds(spec)
                value = float(prob_equal(sc))
                if not lo - 1e-12 <= value <= hi + 1e-12:
                    failures.append(f"{kind}[{i}]: {value} not in [{lo}, {hi}]")
    record("5", "sandwich bounds contain the equality probability", not failures,
           "; ".join(failures[:3]) or "80 scenarios")


def test_c06_conditional_consistency():
    sc = BivariateScenario.from_constants(1, 1, 1)
    pe = float(prob_equal(sc))
    # total compensator 3t > 30 at t = 10.5
    tail_diff = abs(float(prob_equal_and_before(sc, 10.5)) - pe)
    ok = tail_diff < 1e-8
    details = [f"limit gap {tail_diff:.2e}"]

    batch = sample_mo_pairs(sc, RngSpec(6), 10**6)
    t_ref = 1.0
    for name, closed, event, given in (
        (
            "given_tau1",
            float(prob_equal_given_tau1_before(sc, t_ref)),
            batch.equal,
            batch.tau1 <= t_ref,
        ),
        (
            "given_both",
            float(prob_equal_given_both_before(sc, t_ref)),
            batch.equal,
            (batch.tau1 <= t_ref) & (batch.tau2 <= t_ref),
        ),
    ):
        m = int(np.count_nonzero(given))
        freq = float(np.count_nonzero(event & given)) / m
        se = math.sqrt(freq * (1 - freq) / m)
        if abs(freq - closed) > 3 * se:
            ok = False
            details.append(f"{name}: |{freq:.5f} - {closed:.5f}| > 3se")
    record("6", "conditional probabilities converge and match Monte Carlo", ok, "; ".join(details))


def test_c07_hazard_limit():
    sc = BivariateScenario.from_constants(2, 3, 5)
    value = float(joint_hazard_ratio(sc, 0.7, 1e-4))
    dev = abs(value - 5.0)
    record(
        "7",
        "joint hazard at eps=1e-4 within 5e-4 of the common rate",
        dev <= 5e-4,
        f"value {value:.7f}, |dev| {dev:.2e} (first-order bias is 6.5e-4 at this eps)",
    )


def test_c08_distance_metrics():
    import warnings

    sc111 = BivariateScenario.from_constants(1, 1, 1)
    ok = True
    details = []
    gap = abs(float(prob_within_eps(sc111, 0.0)) - float(prob_equal(sc111)))
    if gap > 1e-10:
        ok = False
        details.append(f"within(0) gap {gap:.2e}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sc_ind = BivariateScenario.from_constants(1, 1, 0)
    l2_ind = float(l2_distance_sq(sc_ind))
    if abs(l2_ind - 2.0) > 1e-8:
        ok = False
        details.append(f"independence l2 {l2_ind}")
    batch = sample_mo_pairs(sc111, RngSpec(8), 10**6)
    w = (batch.tau1 - batch.tau2) ** 2
    mc = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(w.size))
    l2_closed = float(l2_distance_sq(sc111))
    if abs(mc - l2_closed) > 3 * se:
        ok = False
        details.append(f"l2 MC {mc:.5f} vs {l2_closed:.5f}")
    record("8", "distance metrics agree with limits and Monte Carlo", ok,
           "; ".join(details) or f"l2={l2_closed:.6f}")


def test_c09_multivariate_patterns():
    ok = True
    details = []
    for n in range(2, 9):
        closed = prob_all_equal_pattern(n, SubsetPattern("multiplicative"))
        if abs(closed - 0.5 ** (n - 1)) > 1e-10:
            ok = False
            details.append(f"closed form off at n={n}")
    for n in range(2, 7):
        for kind in ("multiplicative", "fractional"):
            pat = SubsetPattern(kind, 1.0)
            gap = abs(float(prob_all_equal(pattern_system(n, pat))) - prob_all_equal_pattern(n, pat))
            if gap > 1e-9:
                ok = False
                details.append(f"quadrature gap {gap:.2e} at n={n} {kind}")
    for i, n in enumerate((2, 3, 4)):
        sys_n = pattern_system(n, SubsetPattern("multiplicative"))
        batch = sample_systems(sys_n, RngSpec(90 + i), 10**6)
        freq = float(batch.all_equal.mean())
        if not binomial_ok(freq, 0.5 ** (n - 1), 10**6):
            ok = False
            details.append(f"MC off at n={n}: {freq}")
    record("9", "subset patterns: closed forms, quadrature, Monte Carlo", ok, "; ".join(details))


def test_c10_gumbel_reduction_and_domination():
    rng = np.random.default_rng(10)
    ok = True
    details = []
    for _ in range(10):
        r = rng.uniform(0.3, 3.0, size=3)
        s, t = rng.uniform(0.0, 2.0, size=2)
        gs = GumbelScenario.from_constants(*r, 0.0)
        gap = abs(float(gumbel_joint_survival(gs, s, t)) - float(joint_survival(gs.base, s, t)))
        gap2 = abs(float(gumbel_prob_equal(gs)) - float(prob_equal(gs.base)))
        if gap > 1e-12 or gap2 > 1e-12:
            ok = False
            details.append(f"reduction gap {max(gap, gap2):.2e}")
    for l1 in (0.5, 1.0, 2.0):
        for l2 in (0.5, 1.0, 2.0):
            for delta in (0.25, 0.5, 1.0):
                gs = GumbelScenario.from_constants(l1, l2, 1.0, delta)
                value = float(gumbel_prob_equal(gs))
                mo = 1.0 / (l1 + l2 + 1.0)
                if value > mo + 1e-12:
                    ok = False
                    details.append(f"domination fails at ({l1},{l2},{delta})")
    record("10", "delta=0 reduction and domination across the grid", ok, "; ".join(details))


def test_c11_negative_covariance():
    start = time.time()
    cov = gumbel_covariance_constant(2, 2, 1)
    ok = cov < 0
    details = [f"quadrature cov {cov:.6f}"]
    gs = GumbelScenario.from_constants(2, 2, 1, 1.0)
    batch = sample_gumbel_pairs(gs, RngSpec(11), 10**7)
    w = (batch.tau1 - batch.tau1.mean()) * (batch.tau2 - batch.tau2.mean())
    mc = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(w.size))
    if not (mc < 0 and abs(mc) > 3 * se):
        ok = False
        details.append(f"MC cov {mc:.6f} (se {se:.2e}) not significantly negative")
    elapsed = time.time() - start
    if elapsed >= 60.0:
        ok = False
        details.append(f"runtime {elapsed:.0f}s >= 60s")
    record("11", "negative covariance at (2,2,1), delta=1", ok,
           "; ".join(details) + f"; {elapsed:.0f}s")


@pytest.fixture(scope="module")
def erfc_report():
    return erfc_bound_optimize()


def test_c12a_critical_ell(erfc_report):
    dev = abs(erfc_report.ell - 1.27935)
    record(
        "12a",
        "critical ell equals 1.27935 within 1e-4",
        dev <= 1e-4,
        f"computed {erfc_report.ell:.7f} (root of h(1, ell) = 0; the stated "
        f"target differs from the defining equation's value by {dev:.1e})",
    )


def test_c12b_maximizer(erfc_report):
    dev = abs(erfc_report.x_star - 1.2043)
    record("12b", "bound maximizer at 1.2043 within 1e-3", dev <= 1e-3,
           f"computed {erfc_report.x_star:.6f}")


def test_c12c_maximum_gap(erfc_report):
    dev = abs(erfc_report.h_max - 0.00131266)
    record("12c", "maximum slack 0.00131266 within 1e-5", dev <= 1e-5,
           f"computed {erfc_report.h_max:.8f}")


def test_c12d_inequality_grid():
    # cumulative Gaussian-tail evaluation over the full 1e4-point grid
    from simulstop.bivariate import _SegmentCumulative

    xs = np.linspace(1.0, 10.0, 10_000)
    edges = np.linspace(1.0, 30.0, 4_001)
    cum = _SegmentCumulative(lambda u: np.exp(-u * u), edges)
    tails = cum.total - cum.at(xs)
    h_vals = 2 * xs / (4 * xs * xs + 1.25) * np.exp(-xs * xs) - tails
    spot = max(
        abs(float(h_vals[i]) - erfc_bound_h(float(xs[i]), 1.25))
        for i in (0, 4_999, 9_999)
    )
    ok = bool(np.all(h_vals >= 0.0)) and spot < 1e-12
    record("12d", "h(x, 5/4) >= 0 across [1, 10] at 1e4 points", ok,
           f"min {float(h_vals.min()):.2e}")


def test_c13_end_to_end_validation(tmp_path):
    scenarios = {
        "mo_constants": (
            "model bivariate\nalpha1 constant 1.0\nalpha2 constant 1.0\n"
            "alpha3 constant 1.0\n"
        ),
        "gumbel_neg_cov": (
            "model gumbel\nalpha1 constant 2.0\nalpha2 constant 2.0\n"
            "alpha3 constant 1.0\ngumbel_delta 1.0\n"
        ),
        "system3": (
            "model system\nn 3\nshock 1 constant 1.0\nshock 2 constant 1.0\n"
            "shock 3 constant 1.0\nshock 1,2 constant 1.0\nshock 1,3 constant 1.0\n"
            "shock 2,3 constant 1.0\nshock 1,2,3 constant 1.0\n"
        ),
    }
    ok = True
    details = []
    for name, text in scenarios.items():
        f = tmp_path / f"{name}.txt"
        f.write_text(text)
        out = tmp_path / f"{name}.json"
        code = main(
            [
                "validate", "--scenario", str(f), "--samples", "1000000",
                "--seed", "42", "--out", str(out), "--no-figure",
            ]
        )
        if code != 0:
            ok = False
            details.append(f"{name} exited {code}")
            continue
        report = json.loads(out.read_text())
        if not report["pass"]:
            ok = False
            details.append(f"{name} has failing rows")
    # determinism at the pinned seed
    f = tmp_path / "mo_constants.txt"
    rerun = tmp_path / "rerun.json"
    main(["validate", "--scenario", str(f), "--samples", "1000000", "--seed", "42",
          "--out", str(rerun), "--no-figure"])
    if rerun.read_text() != (tmp_path / "mo_constants.json").read_text():
        ok = False
        details.append("repeat run differs at seed 42")
    record("13", "reference-scenario validation exits 0, deterministic", ok, "; ".join(details))
