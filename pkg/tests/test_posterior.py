import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbrff.alignment import LossVector
from pbrff.fourier import FrequencySet, GaussianPrior, make_rng, sample_frequencies
from pbrff.posterior import PseudoPosterior, compute_posterior, f_divergence, kl_to_uniform, resample

TWO_ATOM = np.array([1 / (1 + math.exp(-1)), math.exp(-1) / (1 + math.exp(-1))])


class TestComputePosterior:
    def test_beta_zero_uniform(self):
        q = compute_posterior(LossVector(make_rng(0).random(7), 50), 0.0)
        np.testing.assert_array_equal(q.weights, np.full(7, 1 / 7))

    def test_equal_losses_uniform(self):
        q = compute_posterior(LossVector(np.full(5, 0.3), 10), 4.0)
        np.testing.assert_allclose(q.weights, 0.2, rtol=1e-15)

    def test_two_atom(self):
        q = compute_posterior(LossVector(np.array([0.0, 1.0]), 1), 1.0)
        np.testing.assert_allclose(q.weights, [0.731059, 0.268941], atol=1e-6)
        assert q.t == 1.0

    def test_log_partition(self):
        L = make_rng(1).random(6)
        q = compute_posterior(LossVector(L, 16), 0.5)
        assert q.log_Z == pytest.approx(math.log(np.sum(np.exp(-2.0 * L))), rel=1e-13)

    def test_extreme_temperature_stable(self):
        q = compute_posterior(LossVector(np.array([0.2, 0.2 + 1e-3, 0.9]), 10**6), 1e6)
        assert np.all(np.isfinite(q.weights)) and q.weights[0] == pytest.approx(1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0, 100), st.integers(1, 10_000))
    def test_normalized_and_antimonotone(self, losses, beta, n):
        L = np.array(losses)
        q = compute_posterior(LossVector(L, n), beta)
        assert abs(q.weights.sum() - 1.0) <= 1e-10
        order = np.argsort(L, kind="stable")
        assert np.all(np.diff(q.weights[order]) <= 1e-15)

    def test_negative_beta(self):
        with pytest.raises(ValueError):
            compute_posterior(LossVector(np.ones(2), 3), -1.0)

    def test_expected_loss(self):
        q = compute_posterior(LossVector(np.array([0.0, 1.0]), 1), 1.0)
        assert q.expected_loss() == pytest.approx(TWO_ATOM[1], rel=1e-12)

    def test_save_load(self, tmp_path):
        q = compute_posterior(LossVector(make_rng(2).random(9), 30, False), 0.7)
        q.save(tmp_path / "q.json")
        r = PseudoPosterior.load(tmp_path / "q.json")
        np.testing.assert_array_equal(r.weights, q.weights)
        np.testing.assert_array_equal(r.losses.losses, q.losses.losses)
        assert (r.beta, r.n, r.log_Z) == (q.beta, q.n, q.log_Z)


class TestDivergences:
    def test_kl_uniform(self):
        assert kl_to_uniform(np.full(8, 1 / 8)) == 0.0

    def test_kl_point_mass(self):
        q = np.zeros(8)
        q[3] = 1.0
        assert kl_to_uniform(q) == math.log(8)

    def test_kl_two_atom(self):
        a, b = TWO_ATOM
        direct = math.log(2) + a * math.log(a) + b * math.log(b)
        assert kl_to_uniform(TWO_ATOM) == pytest.approx(direct, rel=1e-12)
        assert direct == pytest.approx(0.110944, abs=1e-6)

    @pytest.mark.parametrize("mu", [1.5, 2.0, 3.0])
    def test_f_uniform(self, mu):
        assert f_divergence(np.full(5, 0.2), mu) == pytest.approx(0.0, abs=1e-14)

    def test_chi2_point_mass(self):
        q = np.zeros(8)
        q[0] = 1.0
        assert f_divergence(q, 2.0) == 7.0

    def test_chi2_two_atom(self):
        a, b = TWO_ATOM
        assert f_divergence(TWO_ATOM, 2.0) == pytest.approx(2 * (a * a + b * b) - 1, rel=1e-12)
        assert f_divergence(TWO_ATOM, 2.0) == pytest.approx(0.213552, abs=1e-6)

    def test_mu_must_exceed_one(self):
        with pytest.raises(ValueError):
            f_divergence(np.ones(2) / 2, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 2**31))
    def test_nonnegative_and_bounded(self, N, seed):
        q = make_rng(seed).dirichlet(np.ones(N) * 0.3)
        assert 0.0 <= kl_to_uniform(q) <= math.log(N) + 1e-12
        # Jensen: ln(chi2 + 1) >= KL
        assert math.log1p(f_divergence(q, 2.0)) >= kl_to_uniform(q) - 1e-12


class TestResample:
    def _freqs(self, N):
        return sample_frequencies(GaussianPrior(1.0, 2), N, seed=0)

    def test_point_mass(self):
        f = self._freqs(6)
        q = np.zeros(6)
        q[4] = 1.0
        out = resample(q, f, 25, seed=1)
        np.testing.assert_array_equal(out.omegas, np.repeat(f.omegas[4:5], 25, axis=0))

    def test_uniform_frequencies(self):
        f = FrequencySet(np.arange(4.0)[:, None], GaussianPrior(1.0, 1), 0)
        out = resample(np.full(4, 0.25), f, 40000, seed=3)
        share = np.bincount(out.omegas[:, 0].astype(int), minlength=4) / 40000
        assert np.all((share >= 0.2375) & (share <= 0.2625))

    def test_deterministic(self):
        f = self._freqs(10)
        q = make_rng(0).dirichlet(np.ones(10))
        np.testing.assert_array_equal(resample(q, f, 30, 5).omegas, resample(q, f, 30, 5).omegas)

    def test_zero_weight_never_drawn(self):
        f = FrequencySet(np.arange(3.0)[:, None], GaussianPrior(1.0, 1), 0)
        out = resample([0.5, 0.0, 0.5], f, 5000, seed=2)
        assert not np.any(out.omegas[:, 0] == 1.0)

    def test_bad_inputs(self):
        f = self._freqs(3)
        with pytest.raises(ValueError):
            resample(np.ones(2) / 2, f, 5, 0)
        with pytest.raises(ValueError):
            resample(np.ones(3) / 3, f, 0, 0)
