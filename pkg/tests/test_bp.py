"""Tests for the message operations, node updates, and the iterative decoder."""

import io
import json
import math

import numpy as np
import pytest
import scipy.signal

import _oracles as orc
from ldlc import bp, channel, lattice
from ldlc.bp import DecoderParams, EdgeMessage
from ldlc.gmix import GaussianMixture, ReductionParams


def mixture(*triples):
    return GaussianMixture.from_triples(triples)


def edge(mix, label, h, var_idx=0, check_idx=0):
    return EdgeMessage(mixture=mix, variable_index=var_idx, check_index=check_idx,
                      coeff_label=label, coeff_value=h)


def exact_params(**kw):
    """No reduction, no effective variance clamp: pure mixture algebra."""
    kw.setdefault("reduction", ReductionParams(theta=0.0, m_max=10**9))
    kw.setdefault("gamma", 1e-300)
    return DecoderParams(**kw)


class TestConvolvePair:
    def test_unit_gaussians(self):
        out = bp.convolve_pair(mixture((0.0, 1.0, 1.0)), mixture((0.0, 1.0, 1.0)), 1.0)
        assert out.to_triples() == [(0.0, 2.0, 1.0)]

    def test_scaled_single_pair(self):
        out = bp.convolve_pair(mixture((1.0, 2.0, 1.0)), mixture((3.0, 4.0, 1.0)), 2.0)
        assert out.to_triples() == [(7.0, 18.0, 1.0)]

    def test_negative_scale_mirrors(self):
        out = bp.convolve_pair(mixture((0.0, 1.0, 1.0)), mixture((3.0, 4.0, 1.0)), -1.0)
        assert out.to_triples() == [(-3.0, 5.0, 1.0)]

    def test_all_pairs_closed_form(self):
        a = mixture((-1.0, 0.5, 0.3), (2.0, 1.5, 0.7))
        u = mixture((0.0, 0.2, 0.2), (1.0, 0.8, 0.5), (-2.0, 0.4, 0.3))
        h = -1.5
        out = bp.convolve_pair(a, u, h)
        expect = orc.exact_convolve(a.to_triples(), u.to_triples(), h)
        t = sum(c for _, _, c in expect)
        assert len(out) == 6
        for got, (m, v, c) in zip(out.to_triples(), expect):
            assert got[0] == pytest.approx(m, rel=1e-13, abs=1e-13)
            assert got[1] == pytest.approx(v, rel=1e-13)
            assert got[2] == pytest.approx(c / t, rel=1e-13)

    def test_matches_gauss_hermite_quadrature(self):
        """Density agrees with direct numerical integration of the defining
        convolution integral."""
        a = mixture((-0.5, 0.3, 0.6), (0.8, 0.5, 0.4))
        u = mixture((0.2, 0.25, 0.7), (-0.4, 0.4, 0.3))
        for h in (1.0, 2.0, -0.7):
            out = bp.convolve_pair(a, u, h)
            zs = np.linspace(-6.0, 6.0, 241)
            got = orc.mix_pdf_grid(out.to_triples(), zs)
            ref = orc.gh_convolve_density(a.to_triples(), u.to_triples(), h, zs)
            assert np.max(np.abs(got - ref)) <= 1e-12

    def test_matches_discrete_convolution(self):
        """Independent route: sample both densities and convolve the samples."""
        a = mixture((-0.5, 0.3, 0.6), (0.8, 0.5, 0.4))
        u = mixture((0.2, 0.25, 0.7), (-0.4, 0.4, 0.3))
        h = 2.0
        step = 1e-3
        zs = np.arange(-20.0, 20.0 + step / 2, step)
        fa = orc.mix_pdf_grid(a.to_triples(), zs)
        fbh = orc.mix_pdf_grid(orc.exact_scale(u.to_triples(), h), zs)
        conv = scipy.signal.fftconvolve(fa, fbh) * step
        z_conv = np.arange(2 * len(zs) - 1) * step - 40.0
        keep = np.abs(z_conv) <= 5.0
        got = orc.mix_pdf_grid(bp.convolve_pair(a, u, h).to_triples(), z_conv[keep])
        assert np.max(np.abs(got - conv[keep])) <= 1e-6

    def test_weights_normalized(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = mixture(*[(rng.normal(), rng.uniform(0.1, 2), rng.uniform(0.1, 1))
                          for _ in range(3)])
            u = mixture(*[(rng.normal(), rng.uniform(0.1, 2), rng.uniform(0.1, 1))
                          for _ in range(2)])
            out = bp.convolve_pair(a, u, rng.uniform(0.5, 2))
            assert abs(sum(c.weight for c in out) - 1.0) <= 1e-12

    def test_zero_scale_rejected(self):
        with pytest.raises(ValueError):
            bp.convolve_pair(mixture((0, 1, 1)), mixture((0, 1, 1)), 0.0)


class TestProductPair:
    def test_self_product_halves_variance(self):
        out = bp.product_pair(mixture((0.0, 1.0, 1.0)), mixture((0.0, 1.0, 1.0)))
        assert out.to_triples() == [(0.0, 0.5, 1.0)]

    def test_harmonic_variance(self):
        v1, v2 = 0.3, 0.7
        out = bp.product_pair(mixture((0.0, v1, 1.0)), mixture((0.0, v2, 1.0)))
        assert out[0].variance == pytest.approx(v1 * v2 / (v1 + v2), rel=1e-14)
        assert out[0].mean == 0.0

    def test_precision_weighted_mean(self):
        out = bp.product_pair(mixture((0.0, 1.0, 1.0)), mixture((2.0, 1.0, 1.0)))
        assert out.to_triples() == [(1.0, 0.5, 1.0)]

    def test_all_pairs_closed_form(self):
        a = mixture((-0.3, 0.4, 0.5), (0.9, 0.6, 0.5))
        r = mixture((0.1, 0.5, 0.3), (1.2, 0.3, 0.7))
        out = bp.product_pair(a, r)
        expect = orc.exact_product(a.to_triples(), r.to_triples())
        assert len(out) == 4
        for got, (m, v, c) in zip(out.to_triples(), expect):
            assert got[0] == pytest.approx(m, rel=1e-13)
            assert got[1] == pytest.approx(v, rel=1e-13)
            assert got[2] == pytest.approx(c, rel=1e-12)

    def test_matches_grid_density(self):
        a = mixture((-0.3, 0.4, 0.5), (0.9, 0.6, 0.5))
        r = mixture((0.1, 0.5, 0.3), (1.2, 0.3, 0.7))
        out = bp.product_pair(a, r)
        zs = orc.adaptive_grid([c.mean for c in out], [c.variance for c in out])
        got = orc.mix_pdf_grid(out.to_triples(), zs)
        ref = orc.grid_product_density(a.to_triples(), r.to_triples(), zs)
        assert np.max(np.abs(got - ref)) <= 1e-6 * np.max(ref)

    def test_log_domain_keeps_relative_weights(self):
        """Pair weights far below linear underflow still come out right."""
        a = mixture((0.0, 1.0, 0.5), (60.0, 1.0, 0.5))
        r = mixture((59.0, 1.0, 1.0))
        out = bp.product_pair(a, r)
        trips = sorted(out.to_triples())
        assert trips[1][0] == pytest.approx(59.5)
        assert trips[1][2] == pytest.approx(1.0, abs=1e-200)
        assert trips[0][2] <= 1e-300

    def test_overflow_fallback_keeps_closest_pair(self):
        """When every pair exponent overflows, the least-suppressed single
        pair survives with weight one."""
        a = mixture((1e200, 1.0, 1.0))
        r = mixture((0.0, 1.0, 1.0))
        out = bp.product_pair(a, r)
        assert out.to_triples() == [(5e199, 0.5, 1.0)]

    def test_zero_weight_component_passthrough(self):
        a = mixture((0.0, 1.0, 0.5), (1e200, 1.0, 0.5))
        out = bp.product_pair(a, mixture((0.0, 1.0, 1.0)))
        trips = sorted(out.to_triples())
        assert trips[0] == (0.0, 0.5, 1.0)
        assert trips[1][2] == 0.0


class TestShiftRepeat:
    def test_single_component_unit_coeff(self):
        out = bp.shift_repeat(mixture((0.1, 0.01, 1.0)), 1.0, (-1, 0, 1))
        means = [c.mean for c in out]
        assert means == pytest.approx([-1.1, -0.1, 0.9], abs=1e-9)
        assert all(c.variance == 0.01 for c in out)
        assert [c.weight for c in out] == pytest.approx([1 / 3] * 3, rel=1e-14)

    def test_negative_coeff_flips_direction(self):
        out = bp.shift_repeat(mixture((0.7, 0.04, 1.0)), -1.0, (-1, 0, 1))
        means = [c.mean for c in out]
        assert means == pytest.approx([1.7, 0.7, -0.3], abs=1e-12)

    def test_fractional_coeff_scales_variance(self):
        out = bp.shift_repeat(mixture((0.0, 0.02, 1.0)), 0.5, (0,))
        assert out.to_triples() == [(0.0, 0.08, 1.0)]

    def test_input_major_component_order(self):
        out = bp.shift_repeat(mixture((0.0, 0.01, 0.5), (0.4, 0.02, 0.5)),
                              1.0, (-1, 0, 1))
        means = [c.mean for c in out]
        assert means == pytest.approx([-1.0, 0.0, 1.0, -1.4, -0.4, 0.6], abs=1e-12)

    def test_matches_pointwise_identity_on_grid(self):
        """Output density equals the periodization sum evaluated directly."""
        mix = mixture((0.25, 0.015, 0.6), (-0.1, 0.03, 0.4))
        for h in (1.0, -0.8, 0.6):
            b_vals = range(-6, 7)
            out = bp.shift_repeat(mix, h, b_vals)
            zs = np.linspace(-4.0, 4.0, 1601)
            got = orc.mix_pdf_grid(out.to_triples(), zs)
            ref = orc.grid_shift_repeat_density(mix.to_triples(), h, b_vals, zs)
            # both normalized over different supports; compare shapes
            scale = got[800] / ref[800]
            assert np.max(np.abs(got - ref * scale)) <= 1e-6 * np.max(got)

    def test_periodic_over_full_shift_range(self):
        out = bp.shift_repeat(mixture((0.3, 0.02, 1.0)), 1.0, range(-8, 9))
        zs = np.linspace(-2.0, 2.0, 801)
        a = orc.mix_pdf_grid(out.to_triples(), zs)
        b = orc.mix_pdf_grid(out.to_triples(), zs + 1.0)
        assert np.max(np.abs(a - b)) <= 1e-6 * np.max(a)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            bp.shift_repeat(mixture((0, 1, 1)), 0.0, (-1, 0, 1))
        with pytest.raises(ValueError):
            bp.shift_repeat(mixture((0, 1, 1)), 1.0, ())


class TestCheckNode:
    def test_degree_two_closed_form(self):
        """With two edges the output is just the other input, scaled and
        periodized."""
        m2, v2, h1, h2 = 0.4, 0.09, 1.0, -0.6
        ins = [edge(mixture((0.0, 0.25, 1.0)), 1, h1, var_idx=0),
               edge(mixture((m2, v2, 1.0)), 2, h2, var_idx=1)]
        outs = bp.check_node(ins, exact_params())
        sm, sv = h2 * m2, h2 * h2 * v2
        got = outs[0].mixture
        assert [c.mean for c in got] == pytest.approx(
            [(b - sm) / h1 for b in (-1, 0, 1)], rel=1e-13, abs=1e-13)
        assert [c.variance for c in got] == pytest.approx([sv / (h1 * h1)] * 3,
                                                          rel=1e-13)
        assert [c.weight for c in got] == pytest.approx([1 / 3] * 3, rel=1e-13)
        assert outs[0].variable_index == 0 and outs[1].variable_index == 1

    def test_degree_three_single_shift(self):
        """b_set = {0}: plain convolution of the scaled others, reflected."""
        mus = [(0.2, 0.04), (-0.3, 0.06), (0.5, 0.05)]
        hs = [1.0, 0.7, -0.7]
        ins = [edge(mixture((m, v, 1.0)), k + 1, hs[k], var_idx=k)
               for k, (m, v) in enumerate(mus)]
        outs = bp.check_node(ins, exact_params(b_set=(0,)))
        for k in range(3):
            other = [j for j in range(3) if j != k]
            em = -sum(hs[j] * mus[j][0] for j in other) / hs[k]
            ev = sum(hs[j] ** 2 * mus[j][1] for j in other) / hs[k] ** 2
            got = outs[k].mixture
            assert len(got) == 1
            assert got[0].mean == pytest.approx(em, rel=1e-12, abs=1e-12)
            assert got[0].variance == pytest.approx(ev, rel=1e-12)

    def test_matches_exact_mixture_algebra(self):
        rng = np.random.default_rng(5)
        mus = [[(rng.normal(), rng.uniform(0.05, 0.3), w) for w in (0.6, 0.4)]
               for _ in range(3)]
        hs = [1.0, -0.6, 0.6]
        ins = [edge(GaussianMixture.from_triples(mus[k]), k + 1, hs[k], var_idx=k)
               for k in range(3)]
        outs = bp.check_node(ins, exact_params())
        expect = orc.exact_check_node(mus, hs, (-1, 0, 1))
        for out_edge, exp in zip(outs, expect):
            zs = np.linspace(-5.0, 5.0, 901)
            got = orc.mix_pdf_grid(out_edge.mixture.to_triples(), zs)
            ref = orc.mix_pdf_grid(exp, zs)
            assert np.max(np.abs(got - ref)) <= 1e-10

    def test_delta_inputs_land_on_integer_combinations(self):
        """Near-deterministic inputs produce peaks at the shifted integer
        combinations, with variances pulled up to the clamp."""
        gamma = 1e-4
        ins = [edge(mixture((1.0, 1e-12, 1.0)), 1, 1.0, var_idx=0),
               edge(mixture((2.0, 1e-12, 1.0)), 2, 1.0, var_idx=1)]
        params = DecoderParams(reduction=ReductionParams(theta=0.0, m_max=10**9),
                               gamma=gamma, b_set=(-1, 0, 1))
        outs = bp.check_node(ins, params)
        assert [c.mean for c in outs[0].mixture] == pytest.approx([-3.0, -2.0, -1.0])
        assert all(c.variance == gamma for c in outs[0].mixture)
        assert [c.mean for c in outs[1].mixture] == pytest.approx([-2.0, -1.0, 0.0])

    def test_input_order_irrelevant(self):
        rng = np.random.default_rng(6)
        ins = [edge(mixture((rng.normal(), 0.1, 1.0)), k + 1, h, var_idx=k)
               for k, h in enumerate((1.0, 0.7, -0.7))]
        a = bp.check_node(ins, exact_params())
        b = bp.check_node(ins[::-1], exact_params())
        for ea, eb in zip(a, b):
            assert ea.coeff_label == eb.coeff_label
            assert ea.mixture.to_triples() == eb.mixture.to_triples()

    def test_degree_one_periodizes_a_spike(self):
        outs = bp.check_node([edge(mixture((0.3, 0.1, 1.0)), 1, 0.5)],
                             DecoderParams())
        got = outs[0].mixture
        assert [c.mean for c in got] == pytest.approx([-2.0, 0.0, 2.0])
        assert all(c.variance == 1e-4 for c in got)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            bp.check_node([], DecoderParams())
        dup = [edge(mixture((0, 1, 1)), 1, 1.0, var_idx=0),
               edge(mixture((0, 1, 1)), 1, 0.5, var_idx=1)]
        with pytest.raises(ValueError):
            bp.check_node(dup, DecoderParams())


class TestVariableNode:
    def test_degree_one_returns_channel_evidence(self):
        ins = [edge(mixture((3.0, 0.5, 1.0)), 1, 1.0)]
        outs, belief = bp.variable_node(ins, y=0.25, sigma2=0.1, params=exact_params())
        assert outs[0].mixture.to_triples() == [(0.25, pytest.approx(0.1, rel=1e-14), 1.0)]

    def test_precision_addition(self):
        """Gaussian inputs at a common mean: precisions add, channel counted
        once in messages and once more (own edge) in the belief."""
        w, s2, y = 0.5, 0.2, 0.0
        ins = [edge(mixture((0.0, w, 1.0)), k, 1.0) for k in (1, 2, 3)]
        outs, belief = bp.variable_node(ins, y=y, sigma2=s2, params=exact_params())
        for e in outs:
            assert len(e.mixture) == 1
            assert e.mixture[0].variance == pytest.approx(1 / (1 / s2 + 2 / w), rel=1e-12)
            assert e.mixture[0].mean == pytest.approx(0.0, abs=1e-15)
        assert belief[0].variance == pytest.approx(1 / (1 / s2 + 3 / w), rel=1e-12)

    def test_matches_exact_mixture_algebra(self):
        rng = np.random.default_rng(7)
        rhos = [[(rng.normal(), rng.uniform(0.1, 0.5), w) for w in (0.5, 0.5)]
                for _ in range(3)]
        y, s2 = 0.4, 0.3
        ins = [edge(GaussianMixture.from_triples(r), k + 1, 1.0)
               for k, r in enumerate(rhos)]
        outs, belief = bp.variable_node(ins, y=y, sigma2=s2, params=exact_params())
        exp_outs, exp_belief = orc.exact_variable_outputs(rhos, y, s2)
        for got_edge, exp in zip(outs, exp_outs):
            got = sorted(got_edge.mixture.to_triples())
            exp = sorted(exp)
            for g, e in zip(got, exp):
                assert g[0] == pytest.approx(e[0], rel=1e-10, abs=1e-12)
                assert g[1] == pytest.approx(e[1], rel=1e-10)
                assert g[2] == pytest.approx(e[2], rel=1e-9, abs=1e-12)

    def test_belief_matches_grid_product(self):
        """Belief density equals channel times all inputs, on a grid."""
        rng = np.random.default_rng(8)
        rhos = [[(rng.normal(0, 0.8), rng.uniform(0.1, 0.5), w) for w in (0.6, 0.4)]
                for _ in range(3)]
        y, s2 = 0.4, 0.3
        ins = [edge(GaussianMixture.from_triples(r), k + 1, 1.0)
               for k, r in enumerate(rhos)]
        _, belief = bp.variable_node(ins, y=y, sigma2=s2, params=exact_params())
        zs = np.linspace(-4.0, 4.0, 3201)
        dens = orc.mix_pdf_grid([(y, s2, 1.0)], zs)
        for r in rhos:
            dens *= orc.mix_pdf_grid(r, zs)
        dens /= scipy.integrate.simpson(dens, x=zs)
        got = orc.mix_pdf_grid(belief.to_triples(), zs)
        assert np.max(np.abs(got - dens)) <= 1e-5 * np.max(dens)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            bp.variable_node([], y=0.0, sigma2=0.1, params=DecoderParams())
        ins = [edge(mixture((0, 1, 1)), 1, 1.0)]
        with pytest.raises(ValueError):
            bp.variable_node(ins, y=0.0, sigma2=0.0, params=DecoderParams())


class TestHardDecision:
    def test_single_component(self):
        assert bp.hard_decision(mixture((1.25, 0.3, 1.0))) == 1.25

    def test_dominant_component_wins(self):
        mix = mixture((0.0, 0.01, 0.7), (5.0, 0.01, 0.3))
        assert bp.hard_decision(mix) == 0.0

    def test_is_argmax_over_component_means(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            trips = [(rng.normal(0, 2), rng.uniform(0.01, 1), rng.uniform(0.05, 1))
                     for _ in range(int(rng.integers(1, 8)))]
            mix = GaussianMixture.from_triples(trips)
            trips = mix.to_triples()
            dens = [orc.mix_pdf(trips, m) for m, _, _ in trips]
            assert bp.hard_decision(mix) == trips[int(np.argmax(dens))][0]

    def test_near_density_mode_for_separated_components(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            means = np.cumsum(rng.uniform(1.5, 3.0, size=k)) - 4.0
            trips = [(float(m), float(rng.uniform(0.002, 0.01)),
                      float(rng.uniform(0.1, 1.0))) for m in means]
            mix = GaussianMixture.from_triples(trips)
            assert abs(bp.hard_decision(mix) - orc.grid_argmax(mix.to_triples())) <= 1e-3


class TestDecode:
    def test_noiseless_observation(self):
        code = lattice.generate(10, 3, 1)
        rng = np.random.default_rng(11)
        # integers within the default shift set (-1, 0, 1): the check nodes
        # can only represent shifts they enumerate
        b = rng.integers(-1, 2, 10)
        y = lattice.encode(code, b.astype(float))
        res = bp.decode(code, y, sigma2=1e-3)
        assert np.array_equal(res.b_hat, b)
        assert res.converged
        assert res.iterations <= 20
        assert np.max(np.abs(res.x_tilde - y)) <= 1e-3

    def test_result_unpacks_as_tuple(self):
        code = lattice.generate(6, 3, 0)
        y = lattice.encode(code, np.zeros(6))
        b_hat, iterations, converged = bp.decode(code, y, sigma2=1e-3)
        assert np.array_equal(b_hat, np.zeros(6))
        assert converged

    def test_deterministic(self):
        code = lattice.generate(10, 3, 1)
        rng = np.random.default_rng(13)
        y = rng.normal(0, 1, 10)
        r1 = bp.decode(code, y, sigma2=0.06)
        r2 = bp.decode(code, y, sigma2=0.06)
        assert np.array_equal(r1.b_hat, r2.b_hat)
        assert np.array_equal(r1.x_tilde, r2.x_tilde)
        assert r1.iterations == r2.iterations

    def test_beliefs_concentrate_over_iterations(self):
        """Average belief variance falls monotonically early in decoding."""
        code = lattice.generate(100, 5, 0)
        rng = np.random.default_rng(12)
        b = rng.integers(-3, 4, 100)
        x = lattice.encode(code, b.astype(float))
        s2 = channel.snr_db_to_sigma2(3.0)
        y = x + rng.normal(0.0, math.sqrt(s2), 100)
        params = DecoderParams(max_iters=5, stability_window=50)
        res = bp.decode(code, y, s2, params, keep_beliefs=True)
        assert len(res.beliefs) == 5
        avg = [float(np.mean([m.variance() for m in row])) for row in res.beliefs]
        assert all(a > b for a, b in zip(avg, avg[1:]))

    def test_trace_schema_and_clamp(self):
        code = lattice.generate(6, 3, 0)
        y = lattice.encode(code, np.zeros(6)) + 0.05
        params = DecoderParams(max_iters=2, stability_window=5)
        buf = io.StringIO()
        bp.decode(code, y, sigma2=0.05, params=params, trace=buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2 * 2 * 6 * 3  # iters * kinds * n * d
        for line in lines:
            rec = json.loads(line)
            assert set(rec) == {"iteration", "check", "variable", "label",
                                "kind", "components"}
            assert rec["kind"] in ("rho", "mu")
            assert 1 <= rec["label"] <= 3
            assert 0 <= rec["check"] < 6 and 0 <= rec["variable"] < 6
            comps = rec["components"]
            assert comps and all(len(c) == 3 for c in comps)
            assert all(v >= params.gamma for _, v, _ in comps)
            assert sum(c for _, _, c in comps) == pytest.approx(1.0, abs=1e-9)

    def test_belief_variances_respect_clamp(self):
        code = lattice.generate(10, 3, 1)
        y = lattice.encode(code, np.zeros(10))
        params = DecoderParams(max_iters=8, stability_window=3, gamma=1e-4)
        res = bp.decode(code, y, sigma2=1e-3, params=params, keep_beliefs=True)
        for row in res.beliefs:
            for mix in row:
                assert all(c.variance >= params.gamma for c in mix)

    def test_rejects_bad_observation(self):
        code = lattice.generate(6, 3, 0)
        with pytest.raises(ValueError):
            bp.decode(code, np.zeros(5), sigma2=0.1)
        with pytest.raises(ValueError):
            bp.decode(code, np.zeros(6), sigma2=0.0)
        with pytest.raises(ValueError):
            bp.decode(code, np.zeros(6), sigma2=math.inf)


class TestParamsValidation:
    def test_default_params(self):
        p = DecoderParams()
        assert p.b_set == (-1, 0, 1)
        assert p.b_array().dtype == np.float64

    def test_b_set_coerced_to_ints(self):
        p = DecoderParams(b_set=(-2.0, -1, 0, 1, 2.0))
        assert p.b_set == (-2, -1, 0, 1, 2)
        assert all(isinstance(b, int) for b in p.b_set)

    def test_rejects_asymmetric_b_set(self):
        with pytest.raises(ValueError):
            DecoderParams(b_set=(0, 1))
        with pytest.raises(ValueError):
            DecoderParams(b_set=())
        DecoderParams(b_set=(1, -1))  # symmetric, any order

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            DecoderParams(gamma=0.0)
        with pytest.raises(ValueError):
            DecoderParams(gamma=math.inf)

    def test_rejects_bad_iteration_controls(self):
        with pytest.raises(ValueError):
            DecoderParams(max_iters=0)
        with pytest.raises(ValueError):
            DecoderParams(stability_window=0)

    def test_rejects_bad_reduction(self):
        with pytest.raises(ValueError):
            DecoderParams(reduction="tight")

    def test_edge_message_validation(self):
        with pytest.raises(ValueError):
            edge(mixture((0, 1, 1)), 1, 0.0)
        with pytest.raises(ValueError):
            edge(mixture((0, 1, 1)), 0, 1.0)
