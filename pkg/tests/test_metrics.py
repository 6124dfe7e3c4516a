import json

import numpy as np
import pytest

from gmmpursuit.data import Dataset
from gmmpursuit.errors import DataError, NumericalError
from gmmpursuit.ga import GAConfig
from gmmpursuit.gmm import GaussianMixture, sample
from gmmpursuit.metrics import (
    compare_estimators,
    mc_negentropy_of_basis,
    relative_accuracy,
    screen_features,
    subspace_distance,
)
from gmmpursuit.negentropy import EstimatorKind, negentropy
from gmmpursuit.projection import Basis, orthonormalize, project_mixture
from conftest import random_covariance, random_mixture

E12 = Basis(np.eye(3)[:, :2], origin="external")
E13 = Basis(np.eye(3)[:, [0, 2]], origin="external")


def tilted_plane():
    M = np.zeros((3, 2))
    M[0, 0] = 1.0
    M[1, 1] = M[2, 1] = 1.0 / np.sqrt(2.0)
    return Basis(M, origin="external")


class TestMcNegentropyOfBasis:
    def test_single_gaussian_is_noise_level(self, rng):
        m = GaussianMixture([1.0], [rng.normal(size=3)], [random_covariance(rng, 3)])
        B = orthonormalize(rng.normal(size=(3, 2)))
        j, se = mc_negentropy_of_basis(m, B, 100_000, seed=4)
        assert abs(j) <= 3 * se

    def test_matches_direct_mc_negentropy(self, rng):
        m = random_mixture(rng, 3, 4)
        B = orthonormalize(rng.normal(size=(4, 2)))
        j, se = mc_negentropy_of_basis(m, B, 20_000, seed=9)
        est = negentropy(project_mixture(m, B), EstimatorKind.mc(20_000, seed=9))
        assert j == est.negentropy
        assert se == est.mc_std_error


class TestRelativeAccuracy:
    def test_published_ut_ratio(self):
        assert relative_accuracy(1.0025, 1.0210) == pytest.approx(0.9818, abs=1e-4)

    def test_published_sote_ratio(self):
        assert relative_accuracy(0.5684, 0.4905) == pytest.approx(1.1589, abs=1e-4)

    def test_equal_inputs_give_exactly_one(self):
        assert relative_accuracy(0.7306, 0.7306) == 1.0

    def test_zero_denominator_rejected(self):
        with pytest.raises(DataError):
            relative_accuracy(1.0, 0.0)


class TestSubspaceDistance:
    def test_identical_spans(self):
        delta, deg = subspace_distance(E12, E12)
        assert delta == 0.0 and deg == 0.0

    def test_orthogonal_second_axis(self):
        delta, deg = subspace_distance(E12, E13)
        assert delta == pytest.approx(1.0, abs=1e-8)
        assert deg == pytest.approx(90.0, abs=1e-8)

    def test_forty_five_degree_construction(self):
        delta, deg = subspace_distance(E12, tilted_plane())
        assert delta == pytest.approx(np.sin(np.radians(45.0)), abs=1e-8)
        assert deg == pytest.approx(45.0, abs=1e-8)

    def test_column_rotation_invariance(self, rng):
        B1 = orthonormalize(rng.normal(size=(5, 2)))
        B2 = orthonormalize(rng.normal(size=(5, 2)))
        Q, R = np.linalg.qr(rng.normal(size=(2, 2)))
        rotated = Basis(B1.matrix @ Q, origin="external")
        d0 = subspace_distance(B1, B2)[0]
        d1 = subspace_distance(rotated, B2)[0]
        assert abs(d0 - d1) < 1e-10

    def test_symmetry(self, rng):
        B1 = orthonormalize(rng.normal(size=(4, 2)))
        B2 = orthonormalize(rng.normal(size=(4, 2)))
        assert subspace_distance(B1, B2) == subspace_distance(B2, B1)

    def test_triangle_inequality_on_degrees(self, rng):
        for _ in range(30):
            b1 = orthonormalize(rng.normal(size=(5, 2)))
            b2 = orthonormalize(rng.normal(size=(5, 2)))
            b3 = orthonormalize(rng.normal(size=(5, 2)))
            d12 = subspace_distance(b1, b2)[1]
            d23 = subspace_distance(b2, b3)[1]
            d13 = subspace_distance(b1, b3)[1]
            assert d13 <= d12 + d23 + 1e-6

    def test_dimension_mismatch(self, rng):
        B1 = orthonormalize(rng.normal(size=(4, 2)))
        B2 = orthonormalize(rng.normal(size=(4, 1)))
        with pytest.raises(DataError):
            subspace_distance(B1, B2)

    def test_rank_deficient_external_basis(self):
        M = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
        with pytest.raises(NumericalError):
            subspace_distance(Basis(M, origin="external"), E12)


class TestScreenFeatures:
    def test_formula_plug_in(self):
        m = GaussianMixture(
            [0.5, 0.5],
            [[2.0, 1.0], [0.0, 1.0]],
            [np.diag([0.25, 1.0]), np.diag([0.25, 1.0])],
        )
        signal, snr = screen_features(m)
        assert signal[0] == pytest.approx(2.0, abs=1e-15)
        assert snr[0] == pytest.approx(2.0, abs=1e-12)
        assert signal[1] == 0.0 and snr[1] == 0.0

    def test_component_swap_negates_signal_only(self, rng):
        mu = rng.normal(size=(2, 4))
        dv = rng.random((2, 4)) + 0.5
        covs = [np.diag(dv[0]), np.diag(dv[1])]
        a = GaussianMixture([0.4, 0.6], mu, covs)
        b = GaussianMixture([0.6, 0.4], mu[::-1], covs[::-1])
        sig_a, snr_a = screen_features(a)
        sig_b, snr_b = screen_features(b)
        assert np.allclose(sig_a, -sig_b, atol=0)
        assert np.allclose(snr_a, snr_b, atol=0)
        assert sig_a.shape == (4,) and np.all(snr_a >= 0)

    def test_wrong_component_count(self, rng):
        with pytest.raises(DataError):
            screen_features(random_mixture(rng, 3, 2))

    def test_non_diagonal_rejected(self, rng):
        covs = [random_covariance(rng, 2), random_covariance(rng, 2)]
        covs[0][0, 1] = covs[0][1, 0] = 0.4
        m = GaussianMixture([0.5, 0.5], rng.normal(size=(2, 2)), covs)
        with pytest.raises(DataError):
            screen_features(m)


class TestCompareEstimators:
    MODEL = GaussianMixture(
        [1.0 / 3.0] * 3,
        [[-1.0, -1.0, 0.0], [0.0, 1.0, 0.0], [1.0, -1.0, 0.0]],
        [np.eye(3) * 0.15] * 3,
    )
    SMALL = GAConfig(pop_size=20, max_iter=30, run_stall=8)

    def test_full_report_shape(self):
        data = sample(self.MODEL, 200, seed=0)
        rep = compare_estimators(
            self.MODEL, 2, self.SMALL, seed=0, mc_samples=20_000, data=data
        )
        assert rep.estimators == ("ut", "var", "sote")
        assert rep.angle_labels == ("ut", "var", "sote", "pca")
        A = rep.angles_degrees
        assert A.shape == (4, 4)
        assert np.array_equal(A, A.T)
        assert np.all(np.diag(A) == 0.0)
        assert np.all((A >= 0.0) & (A <= 90.0))
        assert rep.failures == {}
        for e in rep.estimators:
            assert rep.relative_accuracy[e] == rep.negentropy[e] / rep.mc_negentropy[e]

    def test_single_gaussian_marks_ratios_unavailable(self, rng):
        m = GaussianMixture([1.0], [rng.normal(size=3)], [random_covariance(rng, 3)])
        rep = compare_estimators(m, 2, self.SMALL, seed=1, mc_samples=10_000)
        for e in rep.estimators:
            assert rep.relative_accuracy[e] is None
            assert abs(rep.negentropy[e]) < 1e-6

    def test_json_round_trip(self):
        rep = compare_estimators(self.MODEL, 2, self.SMALL, seed=2, mc_samples=10_000)
        doc = json.loads(json.dumps(rep.to_json_dict()))
        assert doc["estimators"] == ["ut", "var", "sote"]
        assert len(doc["angles_degrees"]) == len(doc["angle_labels"])

    def test_unknown_estimator_rejected(self):
        with pytest.raises(DataError):
            compare_estimators(self.MODEL, 2, self.SMALL, estimators=("ut", "ica"))
