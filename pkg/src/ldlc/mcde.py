"""Monte Carlo density evolution for asymptotic threshold analysis.

Instead of a factor graph, message distributions are represented by pools of
sampled mixtures, one population per coefficient label h_1..h_d (a cycle-free
infinite Latin-square graph has exactly one edge of each label at every
node).  Each half-iteration resamples every population: an output of label k
combines d-1 inputs drawn from the other labels' populations (the check form
convolves and periodizes, the variable form multiplies with fresh channel
evidence under the all-zeros assumption).  Convergence is declared when the
mean-squared hard decision approaches zero.

The asymptotic model uses the magnitude sequence directly (no determinant
rescaling).  Check-node samples draw fresh random signs for their edge
coefficients, as in the code ensemble.  For the infinite-pool law the signs
are immaterial (all message distributions are symmetric and the node
operations commute with mirroring), but for a finite pool they are load
bearing: with all-positive coefficients the pool's collective mean error is
amplified coherently by (sum_j h_j)/h_k per check pass and the evolution
blows up after a few iterations; random signs make those contributions
cancel in expectation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bp
from ._stats import MessageStats
from .channel import snr_db_to_sigma2
from .lattice import latin_coeffs

#: Convergence epsilon terms: mse must drop below
#: max(EPS_REL_SIGMA2 * sigma2, EPS_REL_GAMMA * gamma).  The hard-decision
#: mean-square floor of a convergent evolution is set by the variance clamp
#: (empirically ~0.3 * gamma, independent of pool size and theta), so the
#: gamma term dominates for practical clamps and sits orders of magnitude
#: below the non-convergent plateau (~0.5 * sigma2); the sigma2-relative
#: term only binds if gamma is configured far below its usual range.
EPS_REL_SIGMA2 = 1e-6
EPS_REL_GAMMA = 5.0


@dataclass(frozen=True)
class CodeProfile:
    """Degree and magnitude sequence of the asymptotic ensemble."""

    d: int
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        c = tuple(float(h) for h in self.coeffs)
        if len(c) != self.d:
            raise ValueError(f"need {self.d} magnitudes, got {len(c)}")
        if any(h <= 0 for h in c):
            raise ValueError("magnitudes must be positive")
        if any(c[i] < c[i + 1] for i in range(len(c) - 1)):
            raise ValueError("magnitudes must be non-increasing")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def latin(cls, d: int) -> "CodeProfile":
        return cls(d=d, coeffs=latin_coeffs(d))


@dataclass
class DePool:
    """d per-label populations of sampled messages.

    populations[k-1] holds label k's samples as (means, variances, weights)
    array triples.  After a variable half-iteration, x_tilde holds the hard
    decisions of the per-sample beliefs (None after a check half).
    """

    populations: list[list[tuple]]
    iteration: int = 0
    x_tilde: np.ndarray | None = None

    def __post_init__(self):
        sizes = {len(p) for p in self.populations}
        if len(sizes) != 1:
            raise ValueError(f"populations must share one size, got {sorted(sizes)}")

    @property
    def d(self) -> int:
        return len(self.populations)

    @property
    def pool_size(self) -> int:
        return len(self.populations[0])


def initial_pool(profile: CodeProfile, sigma2: float, pool_size: int, seed) -> DePool:
    """Channel-message pool: every sample is the single Gaussian N(y, sigma2)
    with fresh y ~ N(0, sigma2) (all-zeros transmission)."""
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    rng = np.random.default_rng(seed)
    one = np.ones(1)
    pops = []
    for _ in range(profile.d):
        ys = rng.normal(0.0, math.sqrt(sigma2), size=pool_size)
        pops.append([(np.array([y]), np.array([sigma2]), one) for y in ys])
    return DePool(populations=pops, iteration=0)


def evolve_half_iteration(pool: DePool, node_kind: str, sigma2: float,
                          profile: CodeProfile, dec: bp.DecoderParams, seed,
                          *, stats: MessageStats | None = None) -> DePool:
    """One resampling pass over all d populations.

    For every output sample of label k, d-1 inputs are drawn uniformly (with
    replacement) one from each other label's population, and the bp node
    function of the given kind is applied.  Variable outputs additionally
    draw fresh channel evidence, and their beliefs (which use one extra
    sample of label k itself) produce the hard decisions stored on the
    result.  Deterministic given seed.
    """
    if node_kind not in ("check", "variable"):
        raise ValueError(f"node_kind must be 'check' or 'variable', got {node_kind!r}")
    d = profile.d
    if pool.d != d:
        raise ValueError(f"pool has {pool.d} populations, profile wants {d}")
    rng = np.random.default_rng(seed)
    nsamp = pool.pool_size
    red = dec.reduction
    theta, m_max, gamma = red.theta, red.m_max, dec.gamma
    b_arr = dec.b_array()
    hs = profile.coeffs
    out_pops: list[list[tuple]] = []
    x_tilde = np.empty(d * nsamp) if node_kind == "variable" else None

    for k in range(1, d + 1):
        others = [j for j in range(1, d + 1) if j != k]
        # index draws: one column per contributing label (+ own label for the
        # belief's extra input at variable nodes)
        idx = rng.integers(0, nsamp, size=(nsamp, d - 1)) if d > 1 else None
        if node_kind == "check":
            signs = rng.choice((-1.0, 1.0), size=(nsamp, d))
        else:
            own = rng.integers(0, nsamp, size=nsamp)
            ys = rng.normal(0.0, math.sqrt(sigma2), size=nsamp)
        out = []
        for s in range(nsamp):
            if node_kind == "check":
                mus = [pool.populations[j - 1][idx[s, t]] for t, j in enumerate(others)] if d > 1 else []
                hs_other = [signs[s, t] * hs[j - 1] for t, j in enumerate(others)]
                out.append(bp._check_node_single(
                    mus, hs_other, signs[s, d - 1] * hs[k - 1], theta, m_max, gamma, b_arr,
                    stats=stats, label_out=k))
            else:
                rhos = [pool.populations[j - 1][idx[s, t]] for t, j in enumerate(others)] if d > 1 else []
                msg = bp._variable_node_single(
                    rhos, ys[s], sigma2, theta, m_max, gamma,
                    stats=stats, label_out=k)
                out.append(msg)
                # belief: include an independent draw of label k itself
                extra = pool.populations[k - 1][own[s]]
                full = bp._variable_node_single(
                    rhos + [extra], ys[s], sigma2, theta, m_max, gamma,
                    stats=stats, label_out=k)
                x_tilde[(k - 1) * nsamp + s] = bp._k._argmax_mode_mean(*full)
        out_pops.append(out)

    return DePool(populations=out_pops, iteration=pool.iteration + 1,
                  x_tilde=x_tilde)


def mse(x_tilde: np.ndarray) -> float:
    """Mean-squared hard decision (the error proxy under all-zeros)."""
    x = np.asarray(x_tilde, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no hard decisions given")
    return float(np.mean(x * x))


@dataclass(frozen=True)
class ConvergenceRun:
    """Outcome of one density-evolution run at a fixed noise level."""

    converged: bool
    iterations: int
    mse_trace: tuple[float, ...]
    stats: MessageStats

    def __iter__(self):
        return iter((self.converged, self.iterations, self.stats))


def converges(sigma2: float, profile: CodeProfile, dec: bp.DecoderParams,
              pool_size: int, max_iters: int, eps: float | None, seed,
              *, collect_stats: bool = True) -> ConvergenceRun:
    """Run alternating check/variable half-iterations until the belief mse
    drops below eps or max_iters is reached.

    When eps is None it defaults to max(EPS_REL_SIGMA2 * sigma2,
    EPS_REL_GAMMA * dec.gamma): the variance clamp puts a floor of roughly
    0.3 * gamma under the mse of a convergent run, so a purely
    sigma2-relative epsilon would sit below the reachable floor for the
    usual clamp range and never fire.

    Per-iteration RNG substreams derive from (seed, iteration, half), so a
    run is reproducible and its prefix is shared across longer runs.
    """
    if eps is None:
        eps = max(EPS_REL_SIGMA2 * sigma2, EPS_REL_GAMMA * dec.gamma)
    if not (eps > 0):
        raise ValueError("eps must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    stats = MessageStats()
    pool = initial_pool(profile, sigma2, pool_size, (int(seed), 0, 0))
    trace = []
    for it in range(1, max_iters + 1):
        stats.iteration = it
        pool = evolve_half_iteration(pool, "check", sigma2, profile, dec,
                                     (int(seed), it, 1), stats=stats if collect_stats else None)
        pool = evolve_half_iteration(pool, "variable", sigma2, profile, dec,
                                     (int(seed), it, 2), stats=stats if collect_stats else None)
        ms = mse(pool.x_tilde)
        trace.append(ms)
        if ms < eps:
            return ConvergenceRun(True, it, tuple(trace), stats)
    return ConvergenceRun(False, max_iters, tuple(trace), stats)


@dataclass(frozen=True)
class ThresholdResult:
    """Bisection outcome; threshold_db is the final bracket midpoint."""

    threshold_db: float
    bracket_db: tuple[float, float]
    iters_at_threshold: int
    e_m4: float
    m_histograms: dict

    def to_json_dict(self) -> dict:
        return {
            "threshold_db": self.threshold_db,
            "bracket_db": list(self.bracket_db),
            "iters_at_threshold": self.iters_at_threshold,
            "e_m4": self.e_m4,
            "m_histograms": {str(k): v for k, v in self.m_histograms.items()},
        }


def find_threshold(profile: CodeProfile, dec: bp.DecoderParams, pool_size: int,
                   resolution_db: float, bracket_db: tuple[float, float], seed,
                   *, max_iters: int = 200, eps: float | None = None,
                   convergence_test: Callable[[float], ConvergenceRun] | None = None,
                   log_stream=None) -> ThresholdResult:
    """Bisection for the lowest convergent SNR.

    bracket_db = (lo, hi) must straddle the transition: lo non-convergent,
    hi convergent (validated up front, error otherwise).  Bisects until the
    bracket is no wider than resolution_db; the reported threshold is the
    final midpoint, with statistics from the last convergent run.

    convergence_test overrides the density-evolution predicate (used by the
    CLI stub mode and tests); it maps snr_db to a ConvergenceRun.
    log_stream, if given, receives one JSON line per probed point.
    """
    if resolution_db <= 0:
        raise ValueError("resolution_db must be positive")
    lo, hi = float(bracket_db[0]), float(bracket_db[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo}, {hi})")

    if convergence_test is None:
        def convergence_test(snr_db: float) -> ConvergenceRun:
            return converges(snr_db_to_sigma2(snr_db), profile, dec,
                             pool_size, max_iters, eps, seed)

    def probe(snr_db: float) -> ConvergenceRun:
        run = convergence_test(snr_db)
        if log_stream is not None:
            log_stream.write(json.dumps({
                "snr_db": snr_db,
                "converged": bool(run.converged),
                "iterations": run.iterations,
                "mse_trace": list(run.mse_trace),
                "e_m4": run.stats.e_m4(),
            }) + "\n")
            log_stream.flush()
        return run

    run_lo = probe(lo)
    if run_lo.converged:
        raise ValueError(f"invalid bracket: lower edge {lo} dB already converges")
    run_hi = probe(hi)
    if not run_hi.converged:
        raise ValueError(f"invalid bracket: upper edge {hi} dB does not converge")

    best = run_hi
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        run = probe(mid)
        if run.converged:
            hi, best = mid, run
        else:
            lo = mid

    hists = {lab: best.stats.histogram("rho_tilde", label=lab)
             for lab in best.stats.labels("rho_tilde")}
    return ThresholdResult(
        threshold_db=0.5 * (lo + hi),
        bracket_db=(lo, hi),
        iters_at_threshold=best.iterations,
        e_m4=best.stats.e_m4(),
        m_histograms=hists,
    )


def complexity_stats(stats: MessageStats) -> tuple[float, dict]:
    """E[M^4] over combine-step inputs plus per-label, per-iteration
    histograms {label: {iteration: {m: count}}}."""
    hists: dict = {}
    for (kind, lab, it, m), cnt in sorted(stats.counts.items()):
        if kind != "combine":
            continue
        hists.setdefault(lab, {}).setdefault(it, {})[m] = cnt
    return stats.e_m4(), hists
