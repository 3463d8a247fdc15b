"""Unconstrained-power AWGN channel and word-error-rate simulation.

With the lattice normalized to unit fundamental volume, SNR is defined as
1/(2*pi*e*sigma^2); capacity corresponds to 0 dB.  Because the code is
linear and decoding depends on the noise only, transmitting the all-zeros
lattice point suffices for error-rate estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bp
from ._stats import MessageStats
from .lattice import LdlcCode

TWO_PI_E = 2.0 * math.pi * math.e


def snr_db_to_sigma2(snr_db: float) -> float:
    """Noise variance at the given SNR: sigma^2 = 10^(-snr_db/10)/(2*pi*e)."""
    return 10.0 ** (-snr_db / 10.0) / TWO_PI_E


def sigma2_to_snr_db(sigma2: float) -> float:
    """Inverse of snr_db_to_sigma2."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return -10.0 * math.log10(sigma2 * TWO_PI_E)


@dataclass(frozen=True)
class ChannelParams:
    """Noise variance with its dB equivalent kept consistent."""

    sigma2: float
    snr_db: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if abs(snr_db_to_sigma2(self.snr_db) - self.sigma2) > 1e-9 * self.sigma2:
            raise ValueError(
                f"snr_db={self.snr_db} and sigma2={self.sigma2} are inconsistent")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "ChannelParams":
        return cls(sigma2=snr_db_to_sigma2(snr_db), snr_db=snr_db)

    @classmethod
    def from_sigma2(cls, sigma2: float) -> "ChannelParams":
        return cls(sigma2=sigma2, snr_db=sigma2_to_snr_db(sigma2))


@dataclass(frozen=True)
class TrialResult:
    """One decoding trial: error flag, iterations used, and a histogram of
    mixture sizes seen at variable-node combine steps."""

    word_error: bool
    iterations: int
    m_stats: dict[int, int]


def trial_rng(seed, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream: independent of trial execution order."""
    return np.random.default_rng((int(seed), int(trial)))


def add_noise(x, sigma2: float, seed) -> np.ndarray:
    """y = x + w with w i.i.d. N(0, sigma2).  seed may be a Generator or any
    default_rng seed value; deterministic per seed."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if sigma2 == 0:
        return x.copy()
    return x + rng.normal(0.0, math.sqrt(sigma2), size=x.shape)


def run_trial(code: LdlcCode, sigma2: float, dec: bp.DecoderParams,
              seed, trial: int, collect_stats: bool = True) -> TrialResult:
    """Decode one all-zeros transmission under the trial's noise substream."""
    y = add_noise(np.zeros(code.n), sigma2, trial_rng(seed, trial))
    stats = MessageStats() if collect_stats else None
    result = bp.decode(code, y, sigma2, dec, stats=stats)
    return TrialResult(
        word_error=bool(np.any(result.b_hat != 0)),
        iterations=result.iterations,
        m_stats=stats.histogram("combine") if collect_stats else {},
    )


def wilson_interval(errors: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson score 95% interval (lo, hi) for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class WerResult:
    """Aggregated word-error-rate estimate at one SNR point."""

    snr_db: float
    sigma2: float
    trials: int
    word_errors: int
    wer: float
    ci95: float          # half-width of the Wilson 95% interval
    ci95_lo: float
    ci95_hi: float
    avg_iters: float
    m_stats: dict[int, int]


def simulate_wer(code: LdlcCode, snr_db: float, trials: int,
                 dec: bp.DecoderParams, seed, *, workers: int = 1,
                 collect_stats: bool = True, progress=None) -> WerResult:
    """Monte Carlo WER at one SNR: transmit x = 0, decode, count b_hat != 0.

    Per-trial noise comes from substream (seed, trial), so results do not
    depend on execution order or worker count.  workers > 1 fans trials out
    over a process pool; aggregation is associative, so the outcome is
    identical to a serial run.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sigma2 = snr_db_to_sigma2(snr_db)
    errors = 0
    iters_total = 0
    m_hist: dict[int, int] = {}

    done = 0

    def _fold(tr):
        nonlocal errors, iters_total, done
        errors += tr.word_error
        iters_total += tr.iterations
        done += 1
        for m, cnt in tr.m_stats.items():
            m_hist[m] = m_hist.get(m, 0) + cnt
        if progress is not None:
            progress(done, trials, errors)

    if workers and workers > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(run_trial, code, sigma2, dec, seed, t, collect_stats)
                    for t in range(trials)]
            for fut in cf.as_completed(futs):
                _fold(fut.result())
    else:
        for t in range(trials):
            _fold(run_trial(code, sigma2, dec, seed, t, collect_stats))
    lo, hi = wilson_interval(errors, trials)
    return WerResult(
        snr_db=snr_db,
        sigma2=snr_db_to_sigma2(snr_db),
        trials=trials,
        word_errors=errors,
        wer=errors / trials,
        ci95=(hi - lo) / 2.0,
        ci95_lo=lo,
        ci95_hi=hi,
        avg_iters=iters_total / trials,
        m_stats=dict(sorted(m_hist.items())),
    )
