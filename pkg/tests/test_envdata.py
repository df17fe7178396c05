"""Simulation of training and test environments from the structural model."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ipp.envdata import DEFAULT_CONFOUNDING, make_default_spec, simulate_test, simulate_training
from ipp.errors import DecompositionError, InputError
from ipp.models.scm import (
    INTERVENTION_NAMES,
    CorrelationPerturb,
    CustomGamma,
    MeanShiftOrthogonal,
    Observational,
    Pooled,
    ScmSpec,
    VarianceScale,
    intervention_from_dict,
    parse_intervention,
)


@pytest.fixture(scope="module")
def spec():
    return make_default_spec(5, seed=0)


class TestDefaultSpec:
    def test_noise_covariance(self, spec):
        np.testing.assert_array_equal(np.diag(spec.sigma), np.ones(6))
        np.testing.assert_array_equal(spec.sigma[0, 1:], DEFAULT_CONFOUNDING)
        np.testing.assert_array_equal(spec.sigma_yx, DEFAULT_CONFOUNDING)
        np.testing.assert_array_equal(spec.sigma_x, np.eye(5))

    def test_coefficient_ranges(self, spec):
        assert np.all((spec.beta >= 0) & (spec.beta <= 3))
        assert np.all((spec.gamma >= 0) & (spec.gamma <= 0.5))

    def test_environment_count(self, spec):
        assert spec.n_envs == 6

    def test_mixing_weights(self, spec):
        assert spec.alphas.sum() == pytest.approx(-1.0, abs=1e-12)
        assert np.all(spec.alphas <= 0)

    def test_last_environment_mixes_the_others(self, spec):
        mixed = sum(a * g for a, g in zip(spec.alphas, spec.train_gammas[:5]))
        np.testing.assert_allclose(spec.train_gammas[5], mixed, atol=1e-14)

    def test_base_environments_are_near_identity(self, spec):
        for matrix in spec.train_gammas[:5]:
            assert np.max(np.abs(matrix - np.eye(5))) <= 0.1

    def test_confounding_directions_have_full_rank(self, spec):
        directions = np.column_stack([g @ spec.sigma_yx for g in spec.train_gammas[:5]])
        assert np.linalg.matrix_rank(directions) == 5

    def test_truth_has_zero_intercepts(self, spec):
        truth = spec.truth()
        assert truth.beta0 == 0.0 and truth.gamma0 == 0.0
        np.testing.assert_array_equal(truth.beta, spec.beta)

    def test_deterministic(self):
        a, b = make_default_spec(5, seed=9), make_default_spec(5, seed=9)
        assert a.to_dict() == b.to_dict()
        assert make_default_spec(5, seed=10).to_dict() != a.to_dict()

    def test_other_dimensions_draw_a_positive_definite_confounding(self):
        spec = make_default_spec(3, seed=4)
        assert np.all(np.abs(spec.sigma_yx) <= 0.5)
        assert np.all(np.linalg.eigvalsh(spec.sigma) > 0)
        assert spec.n_envs == 4

    def test_single_covariate_gets_two_base_environments(self):
        spec = make_default_spec(1, seed=0)
        assert spec.n_envs == 3
        assert spec.alphas.sum() == pytest.approx(-1.0)

    def test_without_confounding(self):
        spec = make_default_spec(5, seed=0, confounded=False)
        np.testing.assert_array_equal(spec.sigma, np.eye(6))

    def test_invalid_dimension(self):
        with pytest.raises(InputError, match="d must be at least 1"):
            make_default_spec(0, seed=0)

    def test_round_trip_through_dict(self, spec):
        restored = ScmSpec.from_dict(spec.to_dict())
        assert restored.to_dict() == spec.to_dict()

    def test_missing_field(self, spec):
        data = spec.to_dict()
        del data["beta"]
        with pytest.raises(InputError, match="beta"):
            ScmSpec.from_dict(data)

    def test_rejects_indefinite_sigma(self):
        sigma = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(DecompositionError):
            ScmSpec(d=1, sigma=sigma, beta=[1.0], gamma=[0.0], train_gammas=(np.eye(1), np.eye(1)), seed=0)


class TestSimulateTraining:
    def test_shapes_and_labels(self, spec):
        data = simulate_training(spec, 50)
        assert data.n_envs == 6
        assert data.labels == [f"env{k}" for k in range(1, 7)]
        assert data.sizes.tolist() == [50] * 6
        assert data.d == 5

    def test_bit_identical_reruns(self, spec):
        a, b = simulate_training(spec, 100), simulate_training(spec, 100)
        for env_a, env_b in zip(a, b):
            np.testing.assert_array_equal(env_a.X, env_b.X)
            np.testing.assert_array_equal(env_a.y, env_b.y)

    def test_larger_samples_extend_smaller_ones(self, spec):
        small, large = simulate_training(spec, 100), simulate_training(spec, 200)
        np.testing.assert_array_equal(small[2].X, large[2].X[:100])

    def test_degenerate_model_has_unit_outcome_variance(self):
        spec = ScmSpec(
            d=2, sigma=np.eye(3), beta=[0.0, 0.0], gamma=[0.0, 0.0],
            train_gammas=(np.eye(2), np.eye(2)), seed=3,
        )
        data = simulate_training(spec, 20_000)
        assert np.var(data[0].y, ddof=1) == pytest.approx(1.0, rel=0.05)

    def test_covariance_matches_population(self, spec):
        data = simulate_training(spec, 20_000)
        for k, env in enumerate(data):
            sample = np.cov(env.X, rowvar=False)
            np.testing.assert_allclose(sample, spec.env_covariance(k), atol=0.05)

    def test_too_few_rows(self, spec):
        with pytest.raises(InputError):
            simulate_training(spec, 1)


class TestSimulateTest:
    def test_variance_scale(self, spec):
        test = simulate_test(spec, VarianceScale(c=1.5), 40_000, seed=1)
        np.testing.assert_allclose(np.cov(test.X, rowvar=False), 2.25 * spec.sigma_x, atol=0.1)

    def test_observational_has_identity_gamma(self, spec):
        test = simulate_test(spec, Observational(), 20_000, seed=1)
        np.testing.assert_allclose(np.cov(test.X, rowvar=False), spec.sigma_x, atol=0.05)
        assert test.label == "observational"

    def test_orthogonal_shift_keeps_the_scale_direction(self, spec):
        intervention = MeanShiftOrthogonal(range=5.0, gamma_ref=spec.gamma, seed=2)
        assert intervention.shift(5) @ spec.gamma == pytest.approx(0.0, abs=1e-12)
        test = simulate_test(spec, intervention, 10_000, seed=2)
        projection = test.X @ spec.gamma
        stderr = projection.std(ddof=1) / math.sqrt(projection.size)
        assert abs(projection.mean()) < 3 * stderr + 1e-12

    def test_shift_moves_the_mean(self, spec):
        intervention = MeanShiftOrthogonal(range=5.0, gamma_ref=spec.gamma, seed=2)
        test = simulate_test(spec, intervention, 10_000, seed=2)
        np.testing.assert_allclose(test.X.mean(axis=0), intervention.shift(5), atol=0.05)

    def test_pooled_mixes_training_environments(self, spec):
        test = simulate_test(spec, Pooled(), 600, seed=0)
        assert test.label == "pooled"
        assert test.X.shape == (600, 5)

    def test_seed_defaults_to_spec_seed(self, spec):
        a = simulate_test(spec, Observational(), 10)
        b = simulate_test(spec, Observational(), 10, seed=spec.seed)
        np.testing.assert_array_equal(a.y, b.y)

    def test_correlation_perturbation_is_reproducible(self):
        a = CorrelationPerturb(width=0.75, seed=4).gamma_matrix(3)
        b = CorrelationPerturb(width=0.75, seed=4).gamma_matrix(3)
        np.testing.assert_array_equal(a, b)
        assert np.max(np.abs(a - np.eye(3))) <= 0.75

    def test_custom_gamma_dimension_is_checked(self, spec):
        with pytest.raises(InputError):
            simulate_test(spec, CustomGamma(matrix=np.eye(2)), 10)

    def test_orthogonal_shift_dimension_is_checked(self, spec):
        with pytest.raises(InputError):
            simulate_test(spec, MeanShiftOrthogonal(gamma_ref=np.ones(2)), 10)


class TestInterventionNames:
    def test_every_name_parses(self, spec):
        for name in INTERVENTION_NAMES:
            intervention = parse_intervention(name, spec)
            intervention.validate(spec.d)

    def test_variance_levels(self, spec):
        assert parse_intervention("low-variance", spec).c == pytest.approx(1 / 3)
        assert parse_intervention("high-variance", spec).c == pytest.approx(1.5)

    def test_unknown_name(self, spec):
        with pytest.raises(InputError, match="Unknown intervention 'sideways'"):
            parse_intervention("sideways", spec)

    def test_from_dict(self):
        intervention = intervention_from_dict({"kind": "variance", "c": 2.0})
        assert intervention == VarianceScale(c=2.0)
        with pytest.raises(InputError, match="Unknown intervention kind"):
            intervention_from_dict({"kind": "nope"})
