"""
Scoring rules for multivariate ensemble forecasts.

Forecasts are d×m matrices with one sampled vector per column; each function
scores a single forecast case. The outcome-weighted scores equal w(y) times
the unweighted score of the ensemble reweighted by w(x_i), and the
threshold-weighted scores equal the unweighted score of the chained data.
"""

import math

from dataclasses import dataclass
from typing import Optional

import numpy as np

from wsr.core import (
	BadOrder,
	BadVsWeights,
	BoundsSpec,
	DimensionMismatch,
	ScoreValue,
	multivariate_case,
)
from wsr.weightfns import ChainFn, WeightFn, interval_chain, interval_weight


DEFAULT_VS_ORDER = 0.5


@dataclass(frozen=True)
class VsParams:
	"""
	Order p and scaling matrix h of the variogram score.

	Without `h` every pair of dimensions gets weight one.
	"""

	p: float = DEFAULT_VS_ORDER
	h: Optional[np.ndarray] = None

	def __post_init__(self):
		if not (math.isfinite(self.p) and 0 < self.p):
			raise BadOrder(f"Variogram order p must be positive and finite, got {self.p}")
		if self.h is not None:
			h = np.array(self.h, dtype=np.float64)
			if h.ndim != 2 or h.shape[0] != h.shape[1]:
				raise BadVsWeights(f"Variogram weights must be a square matrix, got shape {h.shape}")
			if not np.all(np.isfinite(h)) or np.any(h < 0):
				raise BadVsWeights("Variogram weights must be finite and nonnegative")
			h.flags.writeable = False
			object.__setattr__(self, 'h', h)

	def scaling(self, dim: int) -> np.ndarray:
		if self.h is None:
			return np.ones((dim, dim))
		if self.h.shape != (dim, dim):
			raise BadVsWeights(f"Variogram weights of shape {self.h.shape} used for dimension {dim}")
		return self.h


# Kernels, on an m×d matrix of row vectors with normalized weights


def _norms(diff: np.ndarray) -> np.ndarray:
	return np.sqrt(np.sum(np.square(diff), axis=-1))


def _squared_norms(diff: np.ndarray) -> np.ndarray:
	return np.sum(np.square(diff), axis=-1)


def _rows(x: np.ndarray) -> np.ndarray:
	# Same memory layout on every path, so chained and unchained data are
	# reduced in the same order.
	return np.ascontiguousarray(x, dtype=np.float64)


def _pairwise(x: np.ndarray) -> np.ndarray:
	return x[:, np.newaxis, :] - x[np.newaxis, :, :]


def _es(x: np.ndarray, w: np.ndarray, y: np.ndarray) -> float:
	x = _rows(x)
	accuracy = np.sum(w * _norms(x - y))
	spread = np.sum(np.outer(w, w) * _norms(_pairwise(x)))
	return max(float(accuracy - spread / 2), 0.0)


def _variogram(x: np.ndarray, p: float) -> np.ndarray:
	# |x_i − x_j|^p for each row, shape (..., d, d)
	return np.abs(x[..., :, np.newaxis] - x[..., np.newaxis, :]) ** p


def _vs(x: np.ndarray, w: np.ndarray, y: np.ndarray, params: VsParams) -> float:
	x = _rows(x)
	h = params.scaling(y.size)
	forecast = np.tensordot(w, _variogram(x, params.p), axes=1)
	observed = _variogram(y, params.p)
	return float(np.sum(h * np.square(forecast - observed)))


def _mmds(x: np.ndarray, w: np.ndarray, y: np.ndarray) -> float:
	x = _rows(x)
	spread = np.sum(np.outer(w, w) * np.exp(-0.5 * _squared_norms(_pairwise(x))))
	accuracy = np.sum(w * np.exp(-0.5 * _squared_norms(x - y)))
	return float(spread / 2 - accuracy)


def _multivariate_weight(weight: Optional[WeightFn], a, b) -> WeightFn:
	if weight is None:
		return interval_weight(BoundsSpec(a, b), multivariate=True)
	if not weight.multivariate:
		raise DimensionMismatch(f"Multivariate score needs a multivariate weight function, got {weight}")
	return weight


def _multivariate_chain(chain: Optional[ChainFn], a, b) -> ChainFn:
	if chain is None:
		return interval_chain(BoundsSpec(a, b), multivariate=True)
	if not chain.multivariate:
		raise DimensionMismatch(f"Multivariate score needs a multivariate chaining function, got {chain}")
	return chain


def _outcome_weighted(kernel, obs, fc, a, b, weight: Optional[WeightFn], *args) -> ScoreValue:
	y, fc = multivariate_case(obs, fc)
	weight = _multivariate_weight(weight, a, b)

	wy = weight(y)
	if wy == 0:
		return ScoreValue(0.0)

	x = fc.columns
	mass = fc.weights * weight(x)
	total = mass.sum()
	if not total > 0:
		return ScoreValue.undefined_weight_mass()

	return ScoreValue(wy * kernel(x, mass / total, y, *args))


def _threshold_weighted(kernel, obs, fc, a, b, chain: Optional[ChainFn], *args) -> ScoreValue:
	y, fc = multivariate_case(obs, fc)
	chain = _multivariate_chain(chain, a, b)
	return ScoreValue(kernel(chain(fc.columns), fc.weights, chain(y), *args))


# Unweighted scores


def es_sample(obs, fc) -> ScoreValue:
	"""
	Energy score: E‖X − y‖ − ½ E‖X − X′‖ with the Euclidean norm.
	"""

	y, fc = multivariate_case(obs, fc)
	return ScoreValue(_es(fc.columns, fc.weights, y))


def vs_sample(obs, fc, params: VsParams = VsParams()) -> ScoreValue:
	"""
	Variogram score of order p: Σ_{i,j} h_ij (E|X_i − X_j|^p − |y_i − y_j|^p)².
	"""

	y, fc = multivariate_case(obs, fc)
	return ScoreValue(_vs(fc.columns, fc.weights, y, params))


def mmds_sample(obs, fc) -> ScoreValue:
	"""
	Kernel score of the Gaussian kernel exp(−½‖·‖²); lies in [−1, ½].
	"""

	y, fc = multivariate_case(obs, fc)
	return ScoreValue(_mmds(fc.columns, fc.weights, y))


# Outcome-weighted scores


def owes_sample(obs, fc, a=-math.inf, b=math.inf, weight: Optional[WeightFn] = None) -> ScoreValue:
	return _outcome_weighted(_es, obs, fc, a, b, weight)


def owvs_sample(
	obs,
	fc,
	a=-math.inf,
	b=math.inf,
	weight: Optional[WeightFn] = None,
	params: VsParams = VsParams(),
) -> ScoreValue:
	return _outcome_weighted(_vs, obs, fc, a, b, weight, params)


def owmmds_sample(obs, fc, a=-math.inf, b=math.inf, weight: Optional[WeightFn] = None) -> ScoreValue:
	return _outcome_weighted(_mmds, obs, fc, a, b, weight)


# Threshold-weighted scores


def twes_sample(obs, fc, a=-math.inf, b=math.inf, chain: Optional[ChainFn] = None) -> ScoreValue:
	return _threshold_weighted(_es, obs, fc, a, b, chain)


def twvs_sample(
	obs,
	fc,
	a=-math.inf,
	b=math.inf,
	chain: Optional[ChainFn] = None,
	params: VsParams = VsParams(),
) -> ScoreValue:
	return _threshold_weighted(_vs, obs, fc, a, b, chain, params)


def twmmds_sample(obs, fc, a=-math.inf, b=math.inf, chain: Optional[ChainFn] = None) -> ScoreValue:
	return _threshold_weighted(_mmds, obs, fc, a, b, chain)
