import io
import math

import numpy as np

from django.test import SimpleTestCase

from wsr.core import AllUndefined, BadGrid, EnsembleForecast, Observation, ScoreValue, Status
from wsr.diagnostics import (
	CurveKind,
	Side,
	check_grid,
	parse_grid,
	score_archive,
	summarize,
	threshold_curve,
)
from wsr.uniscore import crps_sample, logs_sample


def normal_archive(seed: int, n: int, m: int, loc: float = 0.0):
	rng = np.random.default_rng(seed)
	return [
		(Observation(y), EnsembleForecast(members))
		for y, members in zip(rng.normal(size=n), rng.normal(loc, 1.0, size=(n, m)))
	]


class SummarizeTests(SimpleTestCase):

	def test_mean_over_defined(self):
		scores = [ScoreValue(1.0), ScoreValue.undefined_weight_mass(), ScoreValue(2.0), ScoreValue.invalid_input("x")]
		table = summarize(scores)
		self.assertEqual(table.mean_defined, 1.5)
		self.assertEqual(table.n_undefined, 2)
		self.assertEqual(table.n_defined, 2)
		self.assertEqual(table.case_ids, ('1', '2', '3', '4'))
		self.assertEqual(table.status_counts[Status.INVALID_INPUT], 1)

	def test_all_undefined(self):
		with self.assertRaises(AllUndefined):
			summarize([ScoreValue.undefined_weight_mass()])
		table = summarize([ScoreValue.undefined_weight_mass()], allow_all_undefined=True)
		self.assertTrue(math.isnan(table.mean_defined))

	def test_permutation_invariant(self):
		rng = np.random.default_rng(9)
		values = rng.lognormal(0, 3, size=1000)
		scores = [ScoreValue(value) for value in values]
		expected = summarize(scores).mean_defined
		for _ in range(5):
			shuffled = [scores[i] for i in rng.permutation(len(scores))]
			self.assertEqual(summarize(shuffled).mean_defined, expected)

	def test_csv(self):
		table = summarize([ScoreValue(0.25), ScoreValue.undefined_weight_mass()], ['a', 'b'])
		buffer = io.StringIO()
		table.write_csv(buffer, metadata={'kind': 'owcrps'})
		self.assertEqual(buffer.getvalue(), (
			"case_id,score,status\n"
			"a,0.25,defined\n"
			"b,nan,undefined-weight-mass\n"
			"# n=2\n"
			"# n_defined=1\n"
			"# n_undefined=1\n"
			"# mean_defined=0.25\n"
			"# kind=owcrps\n"
		))

	def test_dict(self):
		table = summarize([ScoreValue(0.25), ScoreValue.undefined_weight_mass()])
		data = table.to_dict()
		self.assertIsNone(data['cases'][1]['score'])
		self.assertEqual(data['summary']['mean_defined'], 0.25)


class ScoreArchiveTests(SimpleTestCase):

	def test_order_preserved_with_workers(self):
		archive = normal_archive(1, 200, 20)
		serial = score_archive(archive, crps_sample)
		parallel = score_archive(archive, crps_sample, workers=4)
		self.assertEqual([s.value for s in serial.scores], [s.value for s in parallel.scores])
		for (obs, fc), score in zip(archive, serial.scores):
			self.assertEqual(score.value, crps_sample(obs, fc).value)

	def test_case_errors_become_invalid(self):
		archive = normal_archive(2, 3, 10)
		archive.append((Observation(0.0), EnsembleForecast([1.0, 1.0, 1.0])))
		table = score_archive(archive, logs_sample)
		self.assertIs(table.scores[-1].status, Status.INVALID_INPUT)
		self.assertIn("equal", table.scores[-1].warnings[0])
		self.assertEqual(table.n_undefined, 1)
		self.assertEqual(table.warning_counts, {})


class GridTests(SimpleTestCase):

	def test_parse(self):
		grid = parse_grid('-3:3:0.5')
		self.assertEqual(grid.size, 13)
		self.assertEqual(grid[0], -3.0)
		self.assertEqual(grid[-1], 3.0)

	def test_stop_not_on_step(self):
		np.testing.assert_allclose(parse_grid('0:1:0.3'), [0.0, 0.3, 0.6, 0.9])

	def test_bad_step(self):
		for grid in ['0:1:0', '0:1:-0.5', '0:1', 'a:b:c', '1:0:0.1', '0:inf:1']:
			with self.subTest(grid=grid):
				with self.assertRaises(BadGrid):
					parse_grid(grid)

	def test_must_increase(self):
		with self.assertRaises(BadGrid):
			check_grid([0.0, 0.0, 1.0])
		with self.assertRaises(BadGrid):
			check_grid([])


class ThresholdCurveTests(SimpleTestCase):

	def test_low_threshold_is_unweighted(self):
		archive = normal_archive(3, 50, 30)
		crps = summarize([crps_sample(obs, fc) for obs, fc in archive]).mean_defined
		for kind in CurveKind:
			curve = threshold_curve(archive, kind, [-1e6, 0.0])
			self.assertAlmostEqual(curve.mean_scores[0], crps, delta=1e-12)

	def test_below_mirrors_above(self):
		archive = normal_archive(4, 30, 20)
		mirrored = [(Observation(-obs.value), EnsembleForecast(-fc.members)) for obs, fc in archive]
		above = threshold_curve(archive, CurveKind.TWCRPS, [-1.0, 0.0, 1.0])
		below = threshold_curve(mirrored, CurveKind.TWCRPS, [-1.0, 0.0, 1.0], side=Side.BELOW)
		np.testing.assert_allclose(above.mean_scores, below.mean_scores[::-1], rtol=0, atol=1e-12)

	def test_normal_beats_logistic(self):
		rng = np.random.default_rng(6)
		n, m = 4000, 100
		observations = rng.normal(size=n)
		normal = [(Observation(y), EnsembleForecast(x)) for y, x in zip(observations, rng.normal(size=(n, m)))]
		logistic = [(Observation(y), EnsembleForecast(x)) for y, x in zip(observations, rng.logistic(size=(n, m)))]
		grid = parse_grid('-3:3:0.5')

		tw_normal = threshold_curve(normal, CurveKind.TWCRPS, grid, workers=2)
		tw_logistic = threshold_curve(logistic, CurveKind.TWCRPS, grid)

		self.assertLess(tw_normal.mean_scores[0], tw_logistic.mean_scores[0])
		for curve in (tw_normal, tw_logistic):
			self.assertTrue(np.all(np.diff(curve.mean_scores) <= 1e-12))
			self.assertLess(curve.mean_scores[-1], 0.05 * curve.mean_scores[0])

		ow_normal = threshold_curve(normal, CurveKind.OWCRPS, grid)
		self.assertEqual(ow_normal.n_undefined[0], 0)
		# Outcomes above the threshold with no member there
		self.assertGreater(ow_normal.n_undefined[-4:].sum(), 0)

	def test_all_undefined_threshold_is_nan(self):
		archive = [(Observation(5.0), EnsembleForecast([0.0, 1.0]))]
		curve = threshold_curve(archive, CurveKind.OWCRPS, [-1.0, 2.0])
		self.assertFalse(math.isnan(curve.mean_scores[0]))
		self.assertTrue(math.isnan(curve.mean_scores[1]))
		self.assertEqual(list(curve.n_undefined), [0, 1])

	def test_csv(self):
		archive = [(Observation(1.0), EnsembleForecast([0.0, 2.0]))]
		curve = threshold_curve(archive, CurveKind.OWCRPS, [0.5, 3.0])
		buffer = io.StringIO()
		curve.write_csv(buffer)
		self.assertEqual(buffer.getvalue(), (
			"threshold,mean_score,n_undefined\n"
			"0.5,1,0\n"
			"3,0,0\n"
		))
