"""Exact simulation of every model plus seeded, reproducible estimation.

Randomness is counter-based: draw number ``i`` of substream ``k`` is a
pure function of (seed, k, i), so results do not depend on how the work
is chunked across threads.  The chain, documented so substreams are
portable across implementations:

1. ``s0 = splitmix64(seed)`` and ``s1 = splitmix64(s0 XOR (k+1) * 0xD2B74407B1CE6E93)``
   derive the 64-bit substream key from the user seed and stream index k;
2. raw draw i is ``splitmix64(s1 + i * 0x9E3779B97F4A7C15)`` (all mod 2^64),
   where splitmix64 is the standard finalizer
   ``z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31``;
3. a uniform in (0, 1) is ``((raw >> 11) + 0.5) * 2**-53`` and a unit
   exponential is ``-log(u)``.

Equality of stopping times is an exact event here: the common shock must
strictly precede both idiosyncratic shocks.  Floating-point ties are
broken toward the lower-indexed shock and tallied.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bivariate import BivariateScenario, _Kernel
from .errors import ConfigError, NumericError
from .gumbel import GumbelScenario
from .intensity import CompensatorCurve, StatePath
from .multivariate import ShockSystem

__all__ = [
    "RngSpec",
    "SamplePair",
    "SystemSample",
    "EstimateWithCI",
    "PairBatch",
    "SystemBatch",
    "uniforms",
    "exponentials",
    "sample_eta",
    "sample_mo_pair",
    "sample_mo_pairs",
    "sample_gumbel_pair",
    "sample_gumbel_pairs",
    "sample_system",
    "sample_systems",
    "estimate",
    "export_pairs_csv",
    "export_systems_csv",
    "CI99_FACTOR",
]

CI99_FACTOR = 2.576

_PHI = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD2B74407B1CE6E93
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngSpec:
    """Seed plus substream index; same pair reproduces the same samples."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.stream < 0:
            raise ConfigError("stream index must be nonnegative")


def _splitmix64_int(x: int) -> int:
    x &= _MASK
    x = (x ^ (x >> 30)) * _M1 & _MASK
    x = (x ^ (x >> 27)) * _M2 & _MASK
    return x ^ (x >> 31)


def _substream_key(rng: RngSpec) -> int:
    s0 = _splitmix64_int(rng.seed)
    return _splitmix64_int(s0 ^ ((rng.stream + 1) * _STREAM_SALT & _MASK))


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_M1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def uniforms(rng: RngSpec, count: int, start: int = 0) -> np.ndarray:
    """Uniform (0,1) draws at counter positions start .. start+count-1."""
    key = np.uint64(_substream_key(rng))
    idx = np.arange(start, start + count, dtype=np.uint64)
    raw = _splitmix64_array(key + idx * np.uint64(_PHI))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def exponentials(rng: RngSpec, count: int, start: int = 0) -> np.ndarray:
    """Unit-exponential draws by inversion of :func:`uniforms`."""
    return -np.log(uniforms(rng, count, start))


# ---------------------------------------------------------------------------
# threshold inversion
# ---------------------------------------------------------------------------


def sample_eta(curve: CompensatorCurve, z: float) -> float:
    """First passage of the compensator over the threshold z > 0."""
    if z <= 0:
        raise ValueError("threshold draw must be positive")
    return curve.inverse(z)


def _gumbel_conditional_inverse(u: np.ndarray, z1: np.ndarray, delta: float) -> np.ndarray:
    """Solve (1 + delta*t) exp(-t (1 + delta*s)) = u for t given s = z1.

    Monotone bisection with geometric bracket growth; tolerance 1e-12.
    The delta = 0 case reduces exactly to -log(u).
    """
    if delta == 0.0:
        return -np.log(u)

    rate = 1.0 + delta * z1

    def survival(t: np.ndarray) -> np.ndarray:
        return (1.0 + delta * t) * np.exp(-t * rate)

    hi = np.ones_like(u)
    for _ in range(200):
        need = survival(hi) > u
        if not np.any(need):
            break
        hi = np.where(need, hi * 2.0, hi)
    else:
        raise NumericError("conditional-threshold bracket did not close")
    lo = np.zeros_like(u)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        above = survival(mid) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.max(hi - lo) < 1e-12:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# pair samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplePair:
    tau1: float
    tau2: float
    equal: bool
    cause: tuple


@dataclass
class PairBatch:
    """Vectorized draw of (tau_1, tau_2) with exact equality bookkeeping."""

    tau1: np.ndarray
    tau2: np.ndarray
    equal: np.ndarray
    common1: np.ndarray  # tau_1 caused by the common shock
    common2: np.ndarray
    ties: int
    gumbel: bool = False

    def __len__(self) -> int:
        return self.tau1.size

    def cause_labels(self, component: int) -> list:
        own = "gumbel-pair" if self.gumbel else f"shock{component}"
        flags = self.common1 if component == 1 else self.common2
        return ["common" if c else own for c in flags]


def _pair_kernel(sc: BivariateScenario) -> _Kernel:
    kernels = sc._kernels()
    if len(kernels) != 1:
        raise ConfigError(
            "sampling an ensemble scenario requires fixing a path "
            "(fresh-path sampling takes a path_factory)"
        )
    return kernels[0]


def _assemble_pair_batch(eta1, eta2, eta3, gumbel: bool) -> PairBatch:
    tau1 = np.minimum(eta1, eta3)
    tau2 = np.minimum(eta2, eta3)
    equal = (eta3 < eta1) & (eta3 < eta2)
    ties = int(np.count_nonzero((eta3 == eta1) | (eta3 == eta2)))
    return PairBatch(
        tau1=tau1,
        tau2=tau2,
        equal=equal,
        common1=eta3 < eta1,
        common2=eta3 < eta2,
        ties=ties,
        gumbel=gumbel,
    )


def sample_mo_pairs(
    sc: BivariateScenario,
    rng: RngSpec,
    count: int,
    start: int = 0,
    path_factory: Optional[Callable[[int], StatePath]] = None,
) -> PairBatch:
    """Draw ``count`` pairs from the common-shock model.

    Sample i consumes raw draws 3i, 3i+1, 3i+2 of the stream, so batches
    are independent of chunk boundaries.  With a ``path_factory`` a fresh
    state path (factory(sample_index)) is drawn per sample; otherwise the
    scenario must resolve to a single kernel (constants or a fixed path).
    """
    z = exponentials(rng, 3 * count, 3 * start).reshape(count, 3)
    if path_factory is not None:
        eta = np.empty((count, 3))
        for i in range(count):
            k = _Kernel(sc, path_factory(start + i))
            eta[i, 0] = k.c1.inverse(z[i, 0])
            eta[i, 1] = k.c2.inverse(z[i, 1])
            eta[i, 2] = k.c3.inverse(z[i, 2])
        eta1, eta2, eta3 = eta[:, 0], eta[:, 1], eta[:, 2]
    else:
        k = _pair_kernel(sc)
        eta1 = k.c1.inverse_array(z[:, 0])
        eta2 = k.c2.inverse_array(z[:, 1])
        eta3 = k.c3.inverse_array(z[:, 2])
    return _assemble_pair_batch(eta1, eta2, eta3, gumbel=False)


def sample_mo_pair(sc: BivariateScenario, rng: RngSpec) -> SamplePair:
    """One draw; see :func:`sample_mo_pairs`."""
    b = sample_mo_pairs(sc, rng, 1)
    return SamplePair(
        tau1=float(b.tau1[0]),
        tau2=float(b.tau2[0]),
        equal=bool(b.equal[0]),
        cause=(b.cause_labels(1)[0], b.cause_labels(2)[0]),
    )


def sample_gumbel_pairs(
    gs: GumbelScenario,
    rng: RngSpec,
    count: int,
    start: int = 0,
    path_factory: Optional[Callable[[int], StatePath]] = None,
) -> PairBatch:
    """Pairs under Gumbel-linked thresholds.

    Z1 is a unit exponential; Z2 inverts the conditional survival
    (1 + delta t) exp(-t (1 + delta Z1)); Z3 is an independent unit
    exponential.  Raw-draw layout matches :func:`sample_mo_pairs`.
    """
    u = uniforms(rng, 3 * count, 3 * start).reshape(count, 3)
    z1 = -np.log(u[:, 0])
    z2 = _gumbel_conditional_inverse(u[:, 1], z1, gs.delta)
    z3 = -np.log(u[:, 2])
    if path_factory is not None:
        eta = np.empty((count, 3))
        for i in range(count):
            k = _Kernel(gs.base, path_factory(start + i))
            eta[i, 0] = k.c1.inverse(z1[i])
            eta[i, 1] = k.c2.inverse(z2[i])
            eta[i, 2] = k.c3.inverse(z3[i])
        eta1, eta2, eta3 = eta[:, 0], eta[:, 1], eta[:, 2]
    else:
        k = _pair_kernel(gs.base)
        eta1 = k.c1.inverse_array(z1)
        eta2 = k.c2.inverse_array(z2)
        eta3 = k.c3.inverse_array(z3)
    return _assemble_pair_batch(eta1, eta2, eta3, gumbel=gs.delta > 0)


def sample_gumbel_pair(gs: GumbelScenario, rng: RngSpec) -> SamplePair:
    b = sample_gumbel_pairs(gs, rng, 1)
    return SamplePair(
        tau1=float(b.tau1[0]),
        tau2=float(b.tau2[0]),
        equal=bool(b.equal[0]),
        cause=(b.cause_labels(1)[0], b.cause_labels(2)[0]),
    )


# ---------------------------------------------------------------------------
# system sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemSample:
    times: tuple
    partition: tuple  # groups of components killed by the same shock


@dataclass
class SystemBatch:
    taus: np.ndarray          # (count, n)
    cause_subset: np.ndarray  # (count, n) index into `subsets`
    all_equal: np.ndarray
    subsets: list
    ties: int

    def __len__(self) -> int:
        return self.taus.shape[0]


def sample_systems(
    sys: ShockSystem, rng: RngSpec, count: int, start: int = 0
) -> SystemBatch:
    """Draw ``count`` joint samples: one threshold per shock channel.

    Sample i consumes raw draws [i*m, (i+1)*m) where m is the number of
    channels; component times are minima over the channels hitting them,
    and the equality partition groups components killed by the same shock.
    """
    subsets = sys.subsets()
    m = len(subsets)
    if sys.is_path_driven and sys.path is None:
        raise ConfigError("sampling a path-driven system requires a fixed path")
    curves = sys.curves_for(sys.path)
    z = exponentials(rng, m * count, m * start).reshape(count, m)
    etas = np.empty((count, m))
    for col, key in enumerate(subsets):
        etas[:, col] = curves[key].inverse_array(z[:, col])
    taus = np.empty((count, sys.n))
    cause = np.empty((count, sys.n), dtype=np.int64)
    ties = 0
    for i in range(1, sys.n + 1):
        cols = [c for c, key in enumerate(subsets) if i in key]
        sub = etas[:, cols]
        local = np.argmin(sub, axis=1)
        rows = np.arange(count)
        taus[:, i - 1] = sub[rows, local]
        cause[:, i - 1] = np.asarray(cols)[local]
        ties += int(np.count_nonzero(
            np.sum(sub == taus[:, i - 1][:, None], axis=1) > 1
        ))
    all_equal = np.all(cause == cause[:, [0]], axis=1)
    return SystemBatch(taus=taus, cause_subset=cause, all_equal=all_equal, subsets=subsets, ties=ties)


def sample_system(sys: ShockSystem, rng: RngSpec) -> SystemSample:
    b = sample_systems(sys, rng, 1)
    groups: dict[int, list] = {}
    for comp in range(1, sys.n + 1):
        groups.setdefault(int(b.cause_subset[0, comp - 1]), []).append(comp)
    partition = tuple(tuple(g) for g in groups.values())
    return SystemSample(times=tuple(float(t) for t in b.taus[0]), partition=partition)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateWithCI:
    """Sample mean with standard error and 99% half-width (2.576 se)."""

    mean: float
    std_error: float
    n: int
    ci99_halfwidth: float

    def __post_init__(self):
        if abs(self.ci99_halfwidth - CI99_FACTOR * self.std_error) > 1e-15 * max(
            1.0, self.ci99_halfwidth
        ):
            raise ValueError("ci99_halfwidth must equal 2.576 * std_error")

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n": self.n,
            "ci99": self.ci99_halfwidth,
        }


def _thread_count() -> int:
    raw = os.environ.get("SIMULSTOP_THREADS", "1")
    try:
        t = int(raw)
    except ValueError:
        raise ConfigError(f"SIMULSTOP_THREADS must be an integer, got {raw!r}")
    if t == 0:
        return os.cpu_count() or 1
    return max(1, t)


def estimate(
    fn: Callable,
    sampler: Callable[[RngSpec, int, int], object],
    n: int,
    rng: RngSpec,
    chunk_size: int = 1_000_000,
) -> EstimateWithCI:
    """Monte Carlo mean of ``fn(batch)`` over n samples.

    ``sampler(rng, count, start)`` must honor the counter-based layout so
    the assembled value vector -- and hence the pairwise-summed mean -- is
    bit-identical for any chunking.  Threads (SIMULSTOP_THREADS, 0 = auto)
    only parallelize generation.
    """
    if n < 100:
        raise ConfigError("need at least 100 samples")
    values = np.empty(n)
    spans = [(s, min(chunk_size, n - s)) for s in range(0, n, chunk_size)]

    def work(span):
        s, c = span
        out = np.asarray(fn(sampler(rng, c, s)), dtype=float)
        values[s : s + c] = out

    threads = _thread_count()
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    mean = float(np.sum(values) / n)
    std_error = float(np.std(values, ddof=1) / math.sqrt(n))
    return EstimateWithCI(mean, std_error, n, CI99_FACTOR * std_error)


# ---------------------------------------------------------------------------
# raw-sample export
# ---------------------------------------------------------------------------


def export_pairs_csv(batch: PairBatch, path) -> None:
    cause1 = batch.cause_labels(1)
    cause2 = batch.cause_labels(2)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau1", "tau2", "equal", "cause1", "cause2"])
        for i in range(len(batch)):
            writer.writerow(
                [
                    f"{batch.tau1[i]:.17g}",
                    f"{batch.tau2[i]:.17g}",
                    int(batch.equal[i]),
                    cause1[i],
                    cause2[i],
                ]
            )


def export_systems_csv(batch: SystemBatch, path) -> None:
    n = batch.taus.shape[1]
    labels = ["|".join(str(i) for i in key) for key in batch.subsets]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"tau{i}" for i in range(1, n + 1)]
            + ["all_equal"]
            + [f"cause{i}" for i in range(1, n + 1)]
        )
        for r in range(len(batch)):
            writer.writerow(
                [f"{batch.taus[r, c]:.17g}" for c in range(n)]
                + [int(batch.all_equal[r])]
                + [labels[batch.cause_subset[r, c]] for c in range(n)]
            )
