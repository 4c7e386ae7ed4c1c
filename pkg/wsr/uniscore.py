"""
Scoring rules for univariate ensemble forecasts.

All scores use the empirical distribution of the (member-weighted) ensemble:
every mean over members becomes Σ_i ŵ_i and every mean over member pairs
becomes Σ_{i,j} ŵ_i ŵ_j, with ŵ the normalized member weights.
"""

import math
import warnings

from typing import Optional

import numpy as np

from wsr.core import (
	DECREASING_CHAIN,
	BoundsSpec,
	DecreasingChainWarning,
	DimensionMismatch,
	ScoreValue,
	univariate_case,
)
from wsr.kde import KdeModel
from wsr.weightfns import ChainFn, Family, WeightFn, interval_chain, interval_weight


# Smallest positive normal double; densities below it are clamped so that
# log-scores stay finite.
TINY = np.finfo(np.float64).tiny
LOG_TINY = math.log(TINY)

METHODS = ('sorted', 'naive')


# Kernels


def expected_distance(x: np.ndarray, w: np.ndarray, y: float) -> float:
	"""
	Σ_i w_i |x_i − y|
	"""
	return float(np.sum(w * np.abs(x - y)))


def pairwise_distance_naive(x: np.ndarray, w: np.ndarray) -> float:
	"""
	Σ_{i,j} w_i w_j |x_i − x_j| by the double sum, O(m²).
	"""
	return float(np.sum(np.outer(w, w) * np.abs(x[:, np.newaxis] - x[np.newaxis, :])))


def pairwise_distance_sorted(x: np.ndarray, w: np.ndarray) -> float:
	"""
	Σ_{i,j} w_i w_j |x_i − x_j| in O(m log m).

	With members sorted and C_k the cumulative weight up to and including
	member k, the double sum is 2 Σ_k w_k x_k (C_{k−1} + C_k − T), T = Σ w.
	"""

	order = np.argsort(x, kind='stable')
	xs = x[order]
	ws = w[order]
	# The coefficients sum to zero, so a shift leaves the result unchanged
	# and keeps the products small.
	xs = xs - xs[xs.size // 2]
	cumulative = np.cumsum(ws)
	coefficients = (cumulative - ws) + cumulative - cumulative[-1]
	return float(2 * np.sum(ws * xs * coefficients))


def _crps(x: np.ndarray, w: np.ndarray, y: float, method: str = 'sorted') -> float:
	if method == 'sorted':
		spread = pairwise_distance_sorted(x, w)
	elif method == 'naive':
		spread = pairwise_distance_naive(x, w)
	else:
		raise ValueError(f"Unknown method '{method}', use one of {METHODS}")
	return max(expected_distance(x, w, y) - spread / 2, 0.0)


def _univariate_weight(weight: Optional[WeightFn], a: float, b: float) -> WeightFn:
	if weight is None:
		return interval_weight(BoundsSpec(a, b).univariate())
	if weight.multivariate:
		raise DimensionMismatch(f"Univariate score needs a univariate weight function, got {weight}")
	return weight


def _univariate_chain(chain: Optional[ChainFn], a: float, b: float) -> ChainFn:
	if chain is None:
		return interval_chain(BoundsSpec(a, b).univariate())
	if chain.multivariate:
		raise DimensionMismatch(f"Univariate score needs a univariate chaining function, got {chain}")
	return chain


def _log(value: float) -> float:
	return math.log(max(value, TINY))


def _log_density(model: KdeModel, y: float) -> float:
	# Densities below the smallest normal double count as that double.
	return max(model.logdensity(y), LOG_TINY)


# Scores


def crps_sample(obs, fc, method: str = 'sorted') -> ScoreValue:
	"""
	CRPS of an ensemble forecast: E|X − y| − ½ E|X − X′|.
	"""

	y, fc = univariate_case(obs, fc)
	return ScoreValue(_crps(fc.members, fc.weights, y, method))


def logs_sample(obs, fc, bw: Optional[float] = None) -> ScoreValue:
	"""
	Logarithmic score of the kernel density estimate of the ensemble.
	"""

	y, fc = univariate_case(obs, fc)
	model = KdeModel.from_ensemble(fc, bw)
	return ScoreValue(-_log_density(model, y))


def twcrps_sample(
	obs,
	fc,
	a: float = -math.inf,
	b: float = math.inf,
	chain: Optional[ChainFn] = None,
) -> ScoreValue:
	"""
	Threshold-weighted CRPS: the CRPS of the chained members and observation.

	Without `chain`, v(z) = min(max(z, a), b), which emphasises outcomes in
	(a, b). Custom chains are checked for monotonicity on the pooled members
	and observation; a decreasing chain only warns.
	"""

	y, fc = univariate_case(obs, fc)
	chain = _univariate_chain(chain, a, b)

	flags = ()
	if chain.family is Family.CUSTOM and chain.decreases_on(np.append(fc.members, y)):
		warnings.warn(f"Chaining function {chain} is decreasing", DecreasingChainWarning, stacklevel=2)
		flags = (DECREASING_CHAIN,)

	score = _crps(chain(fc.members), fc.weights, float(chain(y)))
	return ScoreValue(score).with_warnings(*flags)


def owcrps_sample(
	obs,
	fc,
	a: float = -math.inf,
	b: float = math.inf,
	weight: Optional[WeightFn] = None,
) -> ScoreValue:
	"""
	Outcome-weighted CRPS.

	Members are reweighted by w(x_i) and the result is scaled by w(y), so the
	score is zero whenever w(y) = 0. If w(y) > 0 but the forecast puts no
	weight mass on the region of interest the score is undefined, which is
	reported in the status rather than raised.
	"""

	y, fc = univariate_case(obs, fc)
	weight = _univariate_weight(weight, a, b)

	wy = weight(y)
	if wy == 0:
		return ScoreValue(0.0)

	mass = fc.weights * weight(fc.members)
	total = mass.sum()
	if not total > 0:
		return ScoreValue.undefined_weight_mass()

	return ScoreValue(wy * _crps(fc.members, mass / total, y))


def clogs_sample(
	obs,
	fc,
	a: float = -math.inf,
	b: float = math.inf,
	bw: Optional[float] = None,
	cens: bool = True,
) -> ScoreValue:
	"""
	Censored (`cens=True`) or conditional likelihood score.

	Only the indicator weight w(z) = 1{a < z < b} is supported, since the
	region probability P comes from the exact mixture CDF of the kernel
	density estimate.
	"""

	y, fc = univariate_case(obs, fc)
	bounds = BoundsSpec(a, b).univariate()
	a, b = float(bounds.a), float(bounds.b)
	model = KdeModel.from_ensemble(fc, bw)

	if a < y < b:
		score = -_log_density(model, y)
		if not cens:
			# Difference of whichever tails are smaller
			if model.cdf(a) < 0.5:
				probability = model.cdf(b) - model.cdf(a)
			else:
				probability = model.sf(a) - model.sf(b)
			score += _log(probability)
		return ScoreValue(score)

	if not cens:
		return ScoreValue(0.0)

	return ScoreValue(-max(float(np.logaddexp(model.logcdf(a), model.logsf(b))), LOG_TINY))
