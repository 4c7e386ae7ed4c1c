import math

import numpy as np

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from wsr.core import (
	BadBounds,
	BadMemberWeights,
	BoundsSpec,
	DimensionMismatch,
	EnsembleForecast,
	MultivariateEnsemble,
	NonFiniteInput,
	Observation,
	ScoreValue,
	Status,
	TooFewMembers,
	multivariate_case,
	normalize_member_weights,
	univariate_case,
	validate_case,
)


class ScoreValueTests(SimpleTestCase):

	def test_defined_must_be_finite(self):
		with self.assertRaises(NonFiniteInput):
			ScoreValue(math.inf)
		with self.assertRaises(NonFiniteInput):
			ScoreValue(math.nan)

	def test_undefined_is_nan(self):
		score = ScoreValue.undefined_weight_mass()
		self.assertIs(score.status, Status.UNDEFINED_WEIGHT_MASS)
		self.assertFalse(score.is_defined)
		self.assertTrue(math.isnan(score.value))

	def test_invalid_input_keeps_reason(self):
		score = ScoreValue.invalid_input("bad case")
		self.assertIs(score.status, Status.INVALID_INPUT)
		self.assertEqual(score.warnings, ("bad case",))

	def test_with_warnings(self):
		score = ScoreValue(1.5).with_warnings('decreasing-chain')
		self.assertEqual(score.value, 1.5)
		self.assertEqual(score.warnings, ('decreasing-chain',))
		self.assertEqual(float(score), 1.5)


class MemberWeightTests(SimpleTestCase):

	def test_normalized(self):
		weights = normalize_member_weights([1, 3])
		np.testing.assert_allclose(weights, [0.25, 0.75])

	def test_rejects_negative(self):
		with self.assertRaises(BadMemberWeights):
			normalize_member_weights([1, -1, 2])

	def test_rejects_zero_sum(self):
		with self.assertRaises(BadMemberWeights):
			normalize_member_weights([0, 0])

	def test_rejects_wrong_length(self):
		with self.assertRaises(BadMemberWeights):
			EnsembleForecast([1.0, 2.0, 3.0], [1.0, 1.0])

	def test_default_is_uniform(self):
		fc = EnsembleForecast([1.0, 2.0, 3.0, 4.0])
		np.testing.assert_array_equal(fc.weights, np.full(4, 0.25))

	def test_forecast_is_read_only(self):
		fc = EnsembleForecast([1.0, 2.0])
		with self.assertRaises(ValueError):
			fc.members[0] = 5.0


class ForecastTests(SimpleTestCase):

	def test_rejects_non_finite_members(self):
		with self.assertRaises(NonFiniteInput):
			EnsembleForecast([1.0, math.nan])

	def test_rejects_empty(self):
		with self.assertRaises(TooFewMembers):
			EnsembleForecast([])

	def test_rejects_nan_observation(self):
		with self.assertRaises(NonFiniteInput):
			Observation(math.nan)

	def test_multivariate_columns(self):
		fc = MultivariateEnsemble([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
		self.assertEqual(fc.dim, 2)
		self.assertEqual(fc.m, 3)
		np.testing.assert_array_equal(fc.columns[1], [1.0, 4.0])

	def test_dimension_mismatch(self):
		fc = MultivariateEnsemble([[0.0, 1.0], [0.0, 1.0]])
		with self.assertRaises(DimensionMismatch):
			validate_case(Observation([0.0, 0.0, 0.0]), fc)
		with self.assertRaises(DimensionMismatch):
			validate_case(Observation(0.0), fc)
		with self.assertRaises(DimensionMismatch):
			validate_case(Observation([0.0, 1.0]), EnsembleForecast([1.0]))

	def test_coercion(self):
		y, fc = univariate_case(2, [1, 2, 3])
		self.assertEqual(y, 2.0)
		self.assertEqual(fc.m, 3)

		y, fc = multivariate_case([0, 0], [[0, 1], [0, 1]])
		self.assertEqual(fc.dim, 2)

	def test_errors_are_validation_errors(self):
		with self.assertRaises(ValidationError) as cm:
			EnsembleForecast([math.inf])
		self.assertEqual(cm.exception.code, 'non_finite_input')


class BoundsSpecTests(SimpleTestCase):

	def test_a_must_be_below_b(self):
		with self.assertRaisesMessage(BadBounds, "must be smaller than"):
			BoundsSpec(1.0, 0.0)
		with self.assertRaises(BadBounds):
			BoundsSpec(1.0, 1.0)
		with self.assertRaises(BadBounds):
			BoundsSpec([0.0, 2.0], [1.0, 1.0])

	def test_rejects_nan(self):
		with self.assertRaises(BadBounds):
			BoundsSpec(math.nan, 1.0)

	def test_strict_containment(self):
		bounds = BoundsSpec(0.0, 1.0)
		np.testing.assert_array_equal(bounds.contains(np.array([0.0, 0.5, 1.0])), [False, True, False])

	def test_broadcast(self):
		bounds = BoundsSpec(0.0)
		self.assertIsNone(bounds.dim)
		self.assertEqual(bounds.broadcast(3).dim, 3)
		with self.assertRaises(DimensionMismatch):
			BoundsSpec([0.0, 0.0]).broadcast(3)

	def test_univariate(self):
		self.assertEqual(float(BoundsSpec([1.0]).univariate().a), 1.0)
		with self.assertRaises(DimensionMismatch):
			BoundsSpec([0.0, 1.0]).univariate()

	def test_univariate_mixed_shapes(self):
		bounds = BoundsSpec([0.0]).univariate()
		self.assertEqual(float(bounds.a), 0.0)
		self.assertEqual(float(bounds.b), math.inf)
		bounds = BoundsSpec(-1.0, [2.0]).univariate()
		self.assertEqual((float(bounds.a), float(bounds.b)), (-1.0, 2.0))

	def test_unbounded(self):
		self.assertTrue(BoundsSpec().is_unbounded)
		self.assertFalse(BoundsSpec(b=0.0).is_unbounded)
