"""Tests for the AWGN model, Wilson intervals, and the WER simulator."""

import math

import numpy as np
import pytest
import scipy.stats

import _heavy
from ldlc import bp, channel, lattice
from ldlc.channel import ChannelParams, TWO_PI_E


class TestSnrConversion:
    def test_zero_db_is_capacity_variance(self):
        assert channel.snr_db_to_sigma2(0.0) == 1.0 / TWO_PI_E

    def test_known_point(self):
        assert channel.snr_db_to_sigma2(0.6) == pytest.approx(
            0.05099477145574473, rel=1e-13)

    def test_round_trip(self):
        for snr in (-3.0, 0.0, 0.6, 2.5, 10.0):
            back = channel.sigma2_to_snr_db(channel.snr_db_to_sigma2(snr))
            assert back == pytest.approx(snr, abs=1e-12)

    def test_monotone_decreasing(self):
        snrs = np.linspace(-5, 10, 31)
        vals = [channel.snr_db_to_sigma2(s) for s in snrs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            channel.sigma2_to_signal = channel.sigma2_to_snr_db(0.0)
        with pytest.raises(ValueError):
            channel.sigma2_to_snr_db(-1.0)


class TestChannelParams:
    def test_constructors_agree(self):
        a = ChannelParams.from_snr_db(1.5)
        b = ChannelParams.from_sigma2(a.sigma2)
        assert b.snr_db == pytest.approx(1.5, abs=1e-12)
        assert a.sigma2 == b.sigma2

    def test_rejects_inconsistent_pair(self):
        with pytest.raises(ValueError):
            ChannelParams(sigma2=0.05, snr_db=3.0)
        with pytest.raises(ValueError):
            ChannelParams(sigma2=-0.05, snr_db=3.0)


class TestAddNoise:
    def test_zero_variance_copies(self):
        x = np.arange(5, dtype=float)
        y = channel.add_noise(x, 0.0, 0)
        assert np.array_equal(y, x)
        assert y is not x

    def test_deterministic_per_seed(self):
        x = np.zeros(100)
        a = channel.add_noise(x, 0.3, 7)
        b = channel.add_noise(x, 0.3, 7)
        c = channel.add_noise(x, 0.3, 8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_additive_in_signal(self):
        """Same seed gives the same noise draw, so signals subtract out."""
        x = np.linspace(-2, 2, 50)
        n0 = channel.add_noise(np.zeros(50), 0.2, 11)
        nx = channel.add_noise(x, 0.2, 11)
        assert np.allclose(nx - n0, x, atol=1e-15)

    def test_moments_match_large_sample(self):
        sigma2 = 0.7
        w = channel.add_noise(np.zeros(1_000_000), sigma2, 123)
        assert abs(np.mean(w)) <= 4.0 * math.sqrt(sigma2) / 1000.0
        assert np.var(w) == pytest.approx(sigma2, rel=0.01)

    def test_accepts_generator(self):
        rng = np.random.default_rng(5)
        y = channel.add_noise(np.zeros(10), 0.1, rng)
        assert y.shape == (10,)

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError):
            channel.add_noise(np.zeros(3), -0.1, 0)


class TestWilsonInterval:
    def test_matches_scipy(self):
        for errors, trials in [(0, 50), (3, 100), (17, 250), (50, 50), (1, 2000)]:
            lo, hi = channel.wilson_interval(errors, trials)
            ref = scipy.stats.binomtest(errors, trials).proportion_ci(
                confidence_level=0.95, method="wilson")
            assert lo == pytest.approx(ref.low, abs=1e-7)
            assert hi == pytest.approx(ref.high, abs=1e-7)

    def test_bounds_clipped(self):
        lo, _ = channel.wilson_interval(0, 10)
        _, hi = channel.wilson_interval(10, 10)
        assert lo == 0.0
        assert hi == pytest.approx(1.0, abs=1e-12)
        assert hi <= 1.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            channel.wilson_interval(0, 0)


class TestSimulateWer:
    def test_clean_at_high_snr(self):
        code = lattice.generate(10, 3, 1)
        res = channel.simulate_wer(code, 6.0, 100, bp.DecoderParams(), 0,
                                   collect_stats=False)
        assert res.word_errors == 0
        assert res.wer == 0.0
        assert res.m_stats == {}

    def test_saturated_at_very_low_snr(self):
        code = lattice.generate(10, 3, 1)
        res = channel.simulate_wer(code, -6.0, 100, bp.DecoderParams(), 0,
                                   collect_stats=False)
        assert res.wer == 1.0

    def test_aggregates_per_trial_substreams(self):
        """The aggregate equals folding run_trial over the trial indices."""
        code = lattice.generate(6, 3, 0)
        dec = bp.DecoderParams()
        res = channel.simulate_wer(code, 1.0, 5, dec, 3)
        singles = [channel.run_trial(code, res.sigma2, dec, 3, t) for t in range(5)]
        assert res.word_errors == sum(t.word_error for t in singles)
        assert res.avg_iters == pytest.approx(
            sum(t.iterations for t in singles) / 5)
        merged: dict[int, int] = {}
        for t in singles:
            for m, cnt in t.m_stats.items():
                merged[m] = merged.get(m, 0) + cnt
        assert res.m_stats == merged

    def test_reproducible(self):
        code = lattice.generate(6, 3, 0)
        a = channel.simulate_wer(code, 2.0, 3, bp.DecoderParams(), 0)
        b = channel.simulate_wer(code, 2.0, 3, bp.DecoderParams(), 0)
        assert a == b

    def test_worker_count_does_not_change_result(self):
        code = lattice.generate(6, 3, 0)
        dec = bp.DecoderParams()
        serial = channel.simulate_wer(code, 2.0, 10, dec, 1, workers=1)
        pooled = channel.simulate_wer(code, 2.0, 10, dec, 1, workers=2)
        assert serial == pooled

    def test_interval_consistent_with_counts(self):
        code = lattice.generate(10, 3, 1)
        res = channel.simulate_wer(code, 0.0, 20, bp.DecoderParams(), 2,
                                   collect_stats=False)
        lo, hi = channel.wilson_interval(res.word_errors, res.trials)
        assert (res.ci95_lo, res.ci95_hi) == (lo, hi)
        assert res.ci95 == pytest.approx((hi - lo) / 2)
        assert lo <= res.wer <= hi

    def test_mixture_size_histogram_collected(self):
        code = lattice.generate(6, 3, 0)
        res = channel.simulate_wer(code, 3.0, 2, bp.DecoderParams(), 0)
        assert res.m_stats
        assert all(isinstance(m, int) and m >= 1 for m in res.m_stats)
        assert all(cnt > 0 for cnt in res.m_stats.values())
        assert list(res.m_stats) == sorted(res.m_stats)

    def test_rejects_no_trials(self):
        code = lattice.generate(6, 3, 0)
        with pytest.raises(ValueError):
            channel.simulate_wer(code, 3.0, 0, bp.DecoderParams(), 0)

    def test_nonzero_words_decode_like_zeros(self):
        """Linearity spot-check behind the all-zeros shortcut: random words
        at moderate noise decode back exactly (shift set wide enough)."""
        code = lattice.generate(6, 3, 0)
        dec = bp.DecoderParams(b_set=(-2, -1, 0, 1, 2))
        s2 = channel.snr_db_to_sigma2(4.0)
        rng = np.random.default_rng(42)
        for t in range(10):
            b = rng.integers(-1, 2, 6)
            x = lattice.encode(code, b.astype(float))
            y = channel.add_noise(x, s2, (99, t))
            res = bp.decode(code, y, s2, dec)
            assert np.array_equal(res.b_hat, b)


class TestWerCurve:
    def test_three_point_curve_not_increasing(self):
        """Cached medium-size sweep: WER falls with SNR and the endpoints are
        separated beyond their Wilson intervals."""
        pts = [_heavy.wer_point(100, 5, 0, snr, 2000, max_iters=50)
               for snr in (2.0, 2.5, 3.0)]
        wers = [p["wer"] for p in pts]
        assert all(a >= b for a, b in zip(wers, wers[1:]))
        assert pts[0]["ci95_lo"] > pts[-1]["ci95_hi"]
