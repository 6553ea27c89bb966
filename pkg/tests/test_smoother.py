import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings, strategies as st

from colored_lmmse import (ArModel, FilterOptions, IsiChannel, SymbolBeliefs, backward_smooth,
                           block_lmmse, build_state_space, extract_symbol_posteriors, fg_lmmse,
                           forward_pass, noise_covariance, observe, sample_ar_noise,
                           sample_source, six_tap_channel, stabilize_ar)
from colored_lmmse.errors import IndexOutOfRange, InvalidArg, LengthMismatch, NonFiniteValue
from colored_lmmse.model import complex_normal
from colored_lmmse.oracle import convolution_matrix, matrix_lmmse
from colored_lmmse.smoother import block_priors

from conftest import random_channel, random_instance, random_stable_ar, rel_dev


def run_oracle(r, ch, ar, eps, priors=None):
    n = r.shape[-1] - ch.L
    return block_lmmse(r, ch, noise_covariance(ar, n + ch.L, eps), priors)


def make_obs(rng, n, ch, ar):
    return observe(ch, sample_source(n, rng), sample_ar_noise(ar, n + ch.L, rng))


class TestStateSpace:
    def test_l1_p1_layout(self):
        ss = build_state_space(IsiChannel([2.0, 3.0]), stabilize_ar([0.7], 1.0))
        assert ss.d == 3
        np.testing.assert_array_equal(ss.hbar, [3, 2, 1])
        np.testing.assert_array_equal(ss.g, [[0, 1, 0], [0, 0, 0], [0, 0, 0.7]])
        np.testing.assert_array_equal(ss.f, [[0, 0], [1, 0], [0, 1]])

    def test_l0_p1(self):
        ss = build_state_space(IsiChannel([0.5j]), stabilize_ar([0.3], 1.0))
        assert ss.d == 2
        np.testing.assert_array_equal(ss.hbar, [0.5j, 1])

    def test_general_layout(self):
        ch = IsiChannel([1, 2, 3])
        ar = stabilize_ar([0.2, 0.1j, -0.3], 1.0)
        ss = build_state_space(ch, ar)
        L, p, d = 2, 3, 6
        assert ss.d == d
        np.testing.assert_array_equal(ss.hbar, [3, 2, 1, 0, 0, 1])
        np.testing.assert_array_equal(ss.g[L], 0)
        np.testing.assert_array_equal(ss.g[-1, L + 1:], [-0.3, 0.1j, 0.2])
        np.testing.assert_array_equal(ss.g[:L, 1:L + 1], np.eye(L))
        np.testing.assert_array_equal(ss.g[L + 1:d - 1, L + 2:], np.eye(p - 1))
        assert np.count_nonzero(ss.f) == 2
        assert ss.f[L, 0] == 1 and ss.f[-1, 1] == 1

    def test_white_reduced(self):
        ss = build_state_space(IsiChannel([1, 2]), ArModel.white(0.4))
        assert ss.d == 2
        np.testing.assert_array_equal(ss.hbar, [2, 1])
        assert ss.obs_var == 0.4
        np.testing.assert_array_equal(ss.f, [[0, 0], [1, 0]])

    def test_simulation_identity(self, rng):
        ch = random_channel(rng, 3)
        ar = random_stable_ar(rng, 2)
        ss = build_state_space(ch, ar)
        k_total = 100
        x = np.concatenate([sample_source(k_total - ch.L, rng), np.zeros(ch.L)])
        w = complex_normal(k_total, ar.sigma_w2, rng)
        n = scipy.signal.lfilter([1.0], np.concatenate([[1.0], -ar.a]), w)  # from rest
        r = observe(ch, x[: k_total - ch.L], n)
        state = np.zeros(ss.d, dtype=complex)
        for k in range(k_total):
            state = ss.g @ state + ss.f @ np.array([x[k], w[k]])
            assert ss.hbar @ state == pytest.approx(r[k], abs=1e-12)


class TestForward:
    def test_scalar(self):
        ch, ar = IsiChannel([1.0]), ArModel.white(1.0)
        ss = build_state_space(ch, ar)
        opts = FilterOptions(eps=1e-12)
        fwd = forward_pass(ss, [0.6 + 0.2j], block_priors(SymbolBeliefs.standard(1), ss), opts)
        assert fwd.filt_mean[0, 0, 0] == pytest.approx(0.5 * (0.6 + 0.2j), rel=1e-10)

    def test_zero_observations(self, rng):
        n, ch, ar = random_instance(rng, n_max=40)
        ss = build_state_space(ch, ar)
        fwd = forward_pass(ss, np.zeros(n + ch.L), block_priors(SymbolBeliefs.standard(n), ss))
        assert np.all(fwd.filt_mean == 0)
        assert np.all(backward_smooth(ss, fwd).mean == 0)

    def test_filtered_marginal_matches_truncated_oracle(self, rng):
        eps = 1e-5
        for _ in range(10):
            n, ch, ar = random_instance(rng, n_max=40)
            ss = build_state_space(ch, ar)
            r = make_obs(rng, n, ch, ar)
            fwd = forward_pass(ss, r, block_priors(SymbolBeliefs.standard(n), ss),
                               FilterOptions(eps))
            k = int(rng.integers(1, n + 1))  # observations r(1..k), symbols x(1..k)
            b = convolution_matrix(ch, n)[:k, :k]
            cov = noise_covariance(ar, k, eps).matrix
            truncated = matrix_lmmse(r[:k], b, cov, SymbolBeliefs.standard(k))
            assert fwd.filt_mean[0, k - 1, ch.L] == pytest.approx(truncated.mean[-1], abs=1e-7)
            assert fwd.filt_cov[k - 1, ch.L, ch.L].real == pytest.approx(truncated.var[-1],
                                                                         abs=1e-7)

    def test_non_finite(self):
        ch, ar = IsiChannel([1.0, 0.5]), stabilize_ar([0.5], 1.0)
        r = np.zeros(5)
        r[2] = np.nan
        with pytest.raises(NonFiniteValue):
            fg_lmmse(r, ch, ar)

    def test_length_mismatch(self):
        ch, ar = IsiChannel([1.0, 0.5]), stabilize_ar([0.5], 1.0)
        ss = build_state_space(ch, ar)
        with pytest.raises(LengthMismatch):
            forward_pass(ss, np.zeros(6), block_priors(SymbolBeliefs.standard(4), ss))
        with pytest.raises(LengthMismatch):
            fg_lmmse(np.zeros(6), ch, ar, SymbolBeliefs.standard(4))

    def test_pinned_trailing_symbols(self):
        ss = build_state_space(IsiChannel([1.0, 0.5, 0.2]), stabilize_ar([0.5], 1.0))
        bp = block_priors(SymbolBeliefs.standard(4), ss)
        assert len(bp) == 6
        np.testing.assert_array_equal(bp.var[4:, 0], 1e-12)
        np.testing.assert_array_equal(bp.mean[4:, 0], 0)
        np.testing.assert_allclose(bp.var[:, 1], ss.sigma_w2)


class TestBackward:
    def test_single_block_smoothed_equals_filtered(self):
        ch, ar = IsiChannel([0.8]), stabilize_ar([0.6], 0.5)
        ss = build_state_space(ch, ar)
        fwd = forward_pass(ss, [0.3 - 1j], block_priors(SymbolBeliefs.standard(1), ss))
        sm = backward_smooth(ss, fwd)
        np.testing.assert_allclose(sm.mean, fwd.filt_mean, atol=1e-15)
        np.testing.assert_allclose(sm.cov, fwd.filt_cov, atol=1e-15)

    def test_white_scalar_chain(self, rng):
        n0, eps = 0.7, 1e-5
        r = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        post = fg_lmmse(r, IsiChannel([1.0]), ArModel.white(n0), opts=FilterOptions(eps))
        np.testing.assert_allclose(post.mean, r / (1 + n0 + eps), rtol=1e-12)
        np.testing.assert_allclose(post.var, (n0 + eps) / (1 + n0 + eps), rtol=1e-12)

    def test_n50_l2_p2(self, rng):
        ch = random_channel(rng, 2)
        ar = random_stable_ar(rng, 2)
        r = make_obs(rng, 50, ch, ar)
        for eps in (1e-5, 1e-8):
            fg = fg_lmmse(r, ch, ar, opts=FilterOptions(eps))
            ref = run_oracle(r, ch, ar, eps)
            assert rel_dev(fg.mean, ref.mean) <= 1e-8
            assert rel_dev(fg.var, ref.var) <= 1e-8

    def test_covariances_hermitian_psd(self, rng):
        n, ch, ar = 80, random_channel(rng, 4), random_stable_ar(rng, 3)
        ss = build_state_space(ch, ar)
        fwd = forward_pass(ss, make_obs(rng, n, ch, ar), block_priors(SymbolBeliefs.standard(n), ss))
        sm = backward_smooth(ss, fwd)
        for cov in sm.cov:
            np.testing.assert_allclose(cov, cov.conj().T, atol=1e-10)
            assert np.min(np.linalg.eigvalsh(cov)) >= -1e-9 * np.trace(cov).real


class TestExtraction:
    def test_slots_agree(self, rng):
        for _ in range(10):
            n, ch, ar = random_instance(rng, n_max=60)
            r = make_obs(rng, n, ch, ar)
            a = fg_lmmse(r, ch, ar, opts=FilterOptions(extraction_slot="x_slot"))
            b = fg_lmmse(r, ch, ar, opts=FilterOptions(extraction_slot="first_row"))
            assert rel_dev(a.mean, b.mean) <= 1e-8
            assert rel_dev(a.var, b.var) <= 1e-8

    def test_n1_l0_same_position(self):
        ch, ar = IsiChannel([1.0]), stabilize_ar([0.4], 1.0)
        a = fg_lmmse([1.0], ch, ar, opts=FilterOptions(extraction_slot="x_slot"))
        b = fg_lmmse([1.0], ch, ar, opts=FilterOptions(extraction_slot="first_row"))
        assert a.mean[0] == b.mean[0] and a.var[0] == b.var[0]

    def test_variance_real(self, rng):
        n, ch, ar = 40, random_channel(rng, 3), random_stable_ar(rng, 2)
        ss = build_state_space(ch, ar)
        fwd = forward_pass(ss, make_obs(rng, n, ch, ar), block_priors(SymbolBeliefs.standard(n), ss))
        sm = backward_smooth(ss, fwd)
        diag = sm.cov[:n, ch.L, ch.L]
        assert np.max(np.abs(diag.imag)) <= 1e-10

    def test_out_of_range(self):
        ch, ar = IsiChannel([1.0, 1.0]), stabilize_ar([0.4], 1.0)
        ss = build_state_space(ch, ar)
        fwd = forward_pass(ss, np.ones(4), block_priors(SymbolBeliefs.standard(3), ss))
        with pytest.raises(IndexOutOfRange):
            extract_symbol_posteriors(backward_smooth(ss, fwd), ss, 4)

    def test_options_validation(self):
        with pytest.raises(InvalidArg):
            FilterOptions(eps=0.1)
        with pytest.raises(InvalidArg):
            FilterOptions(eps=1e-13)
        with pytest.raises(InvalidArg):
            FilterOptions(extraction_slot="last_row")


class TestFgLmmse:
    def test_six_tap_config(self):
        ch = six_tap_channel(1.0)
        ar = stabilize_ar([0.9], ch.es / 10.0)
        post = fg_lmmse(make_obs(np.random.default_rng(3), 1000, ch, ar), ch, ar)
        assert len(post) == 1000
        r = make_obs(np.random.default_rng(4), 200, ch, ar)
        fg, ref = fg_lmmse(r, ch, ar), run_oracle(r, ch, ar, 1e-5)
        assert rel_dev(fg.mean, ref.mean) <= 1e-7
        assert rel_dev(fg.var, ref.var) <= 1e-7

    def test_white_model_is_white_oracle(self, rng):
        ch = random_channel(rng, 3)
        r = rng.standard_normal(43) + 1j * rng.standard_normal(43)
        fg = fg_lmmse(r, ch, ArModel.white(0.5))
        ref = run_oracle(r, ch, ArModel.white(0.5), 1e-5)
        assert rel_dev(fg.mean, ref.mean) <= 1e-8
        assert rel_dev(fg.var, ref.var) <= 1e-8

    def test_single_tap_colored(self, rng):
        ch = IsiChannel([0.9 - 0.4j])
        ar = random_stable_ar(rng, 3)
        r = make_obs(rng, 60, ch, ar)
        fg, ref = fg_lmmse(r, ch, ar), run_oracle(r, ch, ar, 1e-5)
        assert rel_dev(fg.mean, ref.mean) <= 1e-8
        assert rel_dev(fg.var, ref.var) <= 1e-8

    def test_informative_priors(self, rng):
        n, ch, ar = 70, random_channel(rng, 2), random_stable_ar(rng, 2)
        r = make_obs(rng, n, ch, ar)
        priors = SymbolBeliefs(0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)),
                               rng.uniform(0.05, 3.0, n))
        fg, ref = fg_lmmse(r, ch, ar, priors), run_oracle(r, ch, ar, 1e-5, priors)
        assert rel_dev(fg.mean, ref.mean) <= 1e-8
        assert rel_dev(fg.var, ref.var) <= 1e-8
        assert np.all(fg.var <= priors.var + 1e-12)

    def test_eps_robustness(self, rng):
        n, ch, ar = 100, random_channel(rng, 3), random_stable_ar(rng, 2)
        r = make_obs(rng, n, ch, ar)
        a = fg_lmmse(r, ch, ar, opts=FilterOptions(1e-5))
        b = fg_lmmse(r, ch, ar, opts=FilterOptions(1e-8))
        assert rel_dev(a.mean, b.mean) <= 1e-3
        assert rel_dev(a.var, b.var) <= 1e-3

    def test_linearity(self, rng):
        n, ch, ar = 60, random_channel(rng, 2), random_stable_ar(rng, 3)
        r1, r2 = make_obs(rng, n, ch, ar), make_obs(rng, n, ch, ar)
        p1, p2 = fg_lmmse(r1, ch, ar), fg_lmmse(r2, ch, ar)
        p12 = fg_lmmse(r1 + r2, ch, ar)
        np.testing.assert_allclose(p12.mean, p1.mean + p2.mean, atol=1e-12)
        np.testing.assert_array_equal(p12.var, p1.var)

    def test_batched_matches_single(self, rng):
        n, ch, ar = 30, random_channel(rng, 2), random_stable_ar(rng, 1)
        rs = np.stack([make_obs(rng, n, ch, ar) for _ in range(3)])
        batch = fg_lmmse(rs, ch, ar)
        assert batch.mean.shape == (3, n)
        for t in range(3):
            np.testing.assert_allclose(batch.mean[t], fg_lmmse(rs[t], ch, ar).mean, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), eps=st.sampled_from([1e-5, 1e-8]))
    def test_oracle_equivalence_property(self, seed, eps):
        rng = np.random.default_rng(seed)
        n, ch, ar = random_instance(rng, n_max=50)
        r = make_obs(rng, n, ch, ar)
        fg, ref = fg_lmmse(r, ch, ar, opts=FilterOptions(eps)), run_oracle(r, ch, ar, eps)
        assert rel_dev(fg.mean, ref.mean) <= 1e-7
        assert rel_dev(fg.var, ref.var) <= 1e-7
        assert np.all(fg.var <= 1.0 + 1e-12)
