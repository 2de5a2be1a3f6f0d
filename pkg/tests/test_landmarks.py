import numpy as np
import pytest

from pbrff.data import LabeledDataset
from pbrff.fourier import GaussianPrior, make_rng, rbf_kernel, rff_map
from pbrff.landmarks import (
    Landmarks,
    LandmarkModel,
    fit_landmark_model,
    kmeans,
    landmark_bound_report,
    psi_map,
    rbf_landmark_map,
    select_landmarks_kmeans,
    select_landmarks_random,
)
from pbrff.posterior import kl_to_uniform


def _two_blobs(n, seed, sep=10.0):
    rng = make_rng(seed)
    y = np.arange(n) % 2
    means = np.array([[-sep / 2, 0.0], [sep / 2, 0.0]])
    return LabeledDataset(means[y] + 0.3 * rng.standard_normal((n, 2)), y, 2), means


def _random_ds(n=60, d=3, seed=0):
    rng = make_rng(seed)
    return LabeledDataset(rng.standard_normal((n, d)), rng.integers(0, 2, n), 2)


class TestRandomSelection:
    def test_all_points(self):
        ds = _random_ds(20)
        lm = select_landmarks_random(ds, 20, seed=1)
        np.testing.assert_array_equal(np.sort(lm.indices), np.arange(20))
        np.testing.assert_array_equal(lm.points, ds.features[lm.indices])
        np.testing.assert_array_equal(lm.labels, ds.labels[lm.indices])

    def test_single(self):
        lm = select_landmarks_random(_random_ds(20), 1, seed=2)
        assert len(lm) == 1 and 0 <= lm.indices[0] < 20

    def test_deterministic(self):
        ds = _random_ds(30)
        np.testing.assert_array_equal(select_landmarks_random(ds, 5, 4).indices, select_landmarks_random(ds, 5, 4).indices)

    @pytest.mark.parametrize("n_L", [0, 31])
    def test_invalid(self, n_L):
        with pytest.raises(ValueError):
            select_landmarks_random(_random_ds(30), n_L, 0)


class TestKMeans:
    def test_blob_centres(self):
        ds, means = _two_blobs(200, 0)
        lm = select_landmarks_kmeans(ds, 2, seed=0)
        order = np.argsort(lm.points[:, 0])
        np.testing.assert_allclose(lm.points[order], means, atol=0.1)
        np.testing.assert_array_equal(lm.labels[order], [0, 1])
        assert lm.indices is None and lm.selection == "kmeans"

    def test_single_centroid_is_mean(self):
        ds = _random_ds(50)
        lm = select_landmarks_kmeans(ds, 1, seed=3)
        np.testing.assert_allclose(lm.points[0], ds.features.mean(axis=0), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_nonincreasing(self, seed):
        X = make_rng(seed).standard_normal((300, 4))
        _, _, history = kmeans(X, 8, seed)
        assert np.all(np.diff(history) <= 1e-9 * history[0])

    def test_majority_label_tie(self):
        # one cluster holding one point of each class gets the smaller id
        ds = LabeledDataset([[0.0], [0.0]], [1, 0], 2)
        assert select_landmarks_kmeans(ds, 1, 0).labels[0] == 0

    def test_all_clusters_used(self):
        X = make_rng(0).standard_normal((40, 2))
        _, assign, _ = kmeans(X, 10, 0)
        assert np.unique(assign).size == 10


class TestLandmarkModel:
    def setup_method(self):
        self.ds = _random_ds(80, 2, 1)
        self.lm = select_landmarks_random(self.ds, 5, 0)
        self.prior = GaussianPrior(0.7, 2)

    def test_toy_setting(self):
        m = fit_landmark_model(self.ds, self.lm, self.prior, 20, 1.0, seed=0)
        assert m.n_L == 5 and m.D == 20
        for q in m.posteriors:
            assert q.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert q.losses.n_used == self.ds.n - 1

    def test_beta_zero_is_plain_rff(self):
        m = fit_landmark_model(self.ds, self.lm, self.prior, 30, 0.0, seed=0)
        x = make_rng(9).standard_normal((10, 2))
        psi = psi_map(m, x)
        for l in range(5):
            np.testing.assert_allclose(m.posteriors[l].weights, 1 / 30)
            # the uniform average of cos(omega . (x_l - x)) is the RFF inner product
            direct = rff_map(x, m.freqs[l]) @ rff_map(self.lm.points[l], m.freqs[l])
            np.testing.assert_allclose(psi[:, l], direct, atol=1e-12)

    def test_deterministic(self):
        a = fit_landmark_model(self.ds, self.lm, self.prior, 16, 2.0, seed=5)
        b = fit_landmark_model(self.ds, self.lm, self.prior, 16, 2.0, seed=5)
        for qa, qb in zip(a.posteriors, b.posteriors):
            np.testing.assert_array_equal(qa.weights, qb.weights)

    def test_independent_draws_per_landmark(self):
        m = fit_landmark_model(self.ds, self.lm, self.prior, 8, 1.0, seed=0)
        assert not np.array_equal(m.freqs[0].omegas, m.freqs[1].omegas)
        s = fit_landmark_model(self.ds, self.lm, self.prior, 8, 1.0, seed=0, shared_frequencies=True)
        np.testing.assert_array_equal(s.freqs[0].omegas, s.freqs[1].omegas)

    def test_truncate_equals_direct_fit(self):
        big = fit_landmark_model(self.ds, self.lm, self.prior, 64, 3.0, seed=2)
        small = fit_landmark_model(self.ds, self.lm, self.prior, 16, 3.0, seed=2)
        cut = big.truncate(16)
        for qa, qb in zip(cut.posteriors, small.posteriors):
            np.testing.assert_allclose(qa.weights, qb.weights, rtol=1e-12)

    def test_with_beta_equals_direct_fit(self):
        a = fit_landmark_model(self.ds, self.lm, self.prior, 16, 1.0, seed=2).with_beta(7.0)
        b = fit_landmark_model(self.ds, self.lm, self.prior, 16, 7.0, seed=2)
        for qa, qb in zip(a.posteriors, b.posteriors):
            np.testing.assert_allclose(qa.weights, qb.weights, rtol=1e-12)
        assert a.beta == 7.0

    def test_save_load(self, tmp_path):
        m = fit_landmark_model(self.ds, self.lm, self.prior, 12, 1.5, seed=4)
        m.save(tmp_path / "model")
        r = LandmarkModel.load(tmp_path / "model")
        x = make_rng(0).standard_normal((7, 2))
        np.testing.assert_array_equal(psi_map(r, x), psi_map(m, x))
        np.testing.assert_array_equal(r.landmarks.indices, m.landmarks.indices)
        assert r.beta == 1.5 and r.sigma == 0.7

    def test_save_load_kmeans(self, tmp_path):
        lm = select_landmarks_kmeans(self.ds, 3, 0)
        m = fit_landmark_model(self.ds, lm, self.prior, 5, 1.0, seed=1)
        m.save(tmp_path / "km")
        r = LandmarkModel.load(tmp_path / "km")
        assert r.landmarks.indices is None
        np.testing.assert_array_equal(r.landmarks.points, lm.points)

    @pytest.mark.parametrize("D,beta", [(0, 1.0), (5, -1.0)])
    def test_invalid(self, D, beta):
        with pytest.raises(ValueError):
            fit_landmark_model(self.ds, self.lm, self.prior, D, beta, seed=0)


class TestPsiMap:
    def test_own_landmark(self):
        ds = _random_ds(40, 3, 2)
        lm = select_landmarks_random(ds, 4, 0)
        m = fit_landmark_model(ds, lm, GaussianPrior(1.0, 3), 10, 1.0, seed=0)
        psi = psi_map(m, lm.points)
        np.testing.assert_allclose(np.diag(psi), 1.0, atol=1e-14)
        assert np.all(np.abs(psi) <= 1.0 + 1e-12)

    def test_rbf_limit(self):
        ds = _random_ds(30, 2, 3)
        lm = select_landmarks_random(ds, 3, 0)
        m = fit_landmark_model(ds, lm, GaussianPrior(1.0, 2), 4096, 0.0, seed=1)
        x = make_rng(5).standard_normal((50, 2))
        gap = np.abs(psi_map(m, x) - rbf_landmark_map(lm, 1.0, x))
        assert gap.max() <= 0.08

    def test_vector_input(self):
        ds = _random_ds(30, 2, 3)
        m = fit_landmark_model(ds, select_landmarks_random(ds, 3, 0), GaussianPrior(1.0, 2), 8, 1.0, seed=1)
        assert psi_map(m, np.zeros(2)).shape == (3,)
        with pytest.raises(ValueError):
            psi_map(m, np.zeros(3))


class TestRbfLandmarkMap:
    def test_values(self):
        points = np.array([[0.0, 0.0], [3.0, 1.0]])
        x = make_rng(0).standard_normal((6, 2))
        out = rbf_landmark_map(points, 0.9, x)
        expected = np.column_stack([rbf_kernel(x, p, 0.9) for p in points])
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_own_and_far(self):
        lm = Landmarks(np.array([[1.0, 2.0]]), np.array([0]), "random", np.array([0]))
        assert rbf_landmark_map(lm, 0.5, [1.0, 2.0])[0] == 1.0
        assert rbf_landmark_map(lm, 0.5, [100.0, 2.0])[0] < 1e-12


class TestBoundReport:
    def test_single_landmark_is_plain_bound(self):
        from pbrff.bounds import bound_thm1

        ds = _random_ds(50, 2, 0)
        m = fit_landmark_model(ds, select_landmarks_random(ds, 1, 0), GaussianPrior(1.0, 2), 10, 2.0, seed=0)
        (r,) = landmark_bound_report(m, ds)
        q = m.posteriors[0]
        ref = bound_thm1(q.expected_loss(), kl_to_uniform(q), 50, 2.0 * np.sqrt(50), 0.05)
        assert r.total == pytest.approx(ref.total, rel=1e-14)
        assert r.params["landmark"] == 0 and r.params["heuristic_landmarks"] is False

    def test_uniform_posteriors_zero_kl(self):
        ds = _random_ds(50, 2, 0)
        m = fit_landmark_model(ds, select_landmarks_random(ds, 3, 0), GaussianPrior(1.0, 2), 10, 0.0, seed=0)
        for r in landmark_bound_report(m, ds, t=5.0):
            assert r.divergence == pytest.approx(0.0, abs=1e-14)

    def test_totals_exceed_losses(self):
        ds = _random_ds(50, 2, 0)
        m = fit_landmark_model(ds, select_landmarks_kmeans(ds, 4, 0), GaussianPrior(1.0, 2), 10, 1.0, seed=0)
        reports = landmark_bound_report(m, ds)
        assert all(r.total >= r.empirical_loss for r in reports)
        assert all(r.params["heuristic_landmarks"] for r in reports)
