"""
Weight and chaining functions.

Outcome-weighted scores take a weight function w ≥ 0, threshold-weighted
scores take a chaining function v. The built-in families come in
(weight, chain) pairs with v′ = w:

	interval      w(z) = 1{a < z < b}          v(z) = min(max(z, a), b)
	gauss-cdf     w(z) = Φ_{μ,σ}(z)            v(z) = (z − μ)Φ_{μ,σ}(z) + σ²φ_{μ,σ}(z)
	gauss-pdf     w(z) = φ_{μ,σ}(z)            v(z) = Φ_{μ,σ}(z)
	logistic-cdf  w(z) = F_{μ,s}(z)            v(z) = s·log(1 + exp((z − μ)/s))
	logistic-pdf  w(z) = f_{μ,s}(z)            v(z) = F_{μ,s}(z)

Multivariate weights are products of the per-dimension weights and
multivariate chains apply the per-dimension chains componentwise, which
amounts to a diagonal covariance for the Gaussian families.
"""

import math

from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np

from scipy.special import expit
from scipy.stats import logistic, norm

from wsr.core import (
	BadOutputShape,
	BoundsSpec,
	DimensionMismatch,
	NegativeWeight,
	NonFiniteInput,
	NonPositiveScale,
)


class Family(Enum):
	INTERVAL = 'interval'
	GAUSS_CDF = 'gauss-cdf'
	GAUSS_PDF = 'gauss-pdf'
	LOGISTIC_CDF = 'logistic-cdf'
	LOGISTIC_PDF = 'logistic-pdf'
	PRODUCT = 'product'
	CUSTOM = 'custom'


Params = Tuple[Tuple[str, Any], ...]


def _describe(family: Family, params: Params) -> str:
	def fmt(value: Any) -> str:
		if isinstance(value, np.ndarray):
			value = value.tolist()
		return str(value)

	args = ', '.join(f"{name}={fmt(value)}" for name, value in params)
	return f"{family.value}({args})"


def _multivariate_batch(z: np.ndarray, dim: Optional[int]) -> np.ndarray:
	batch = np.atleast_2d(z)
	if batch.ndim != 2:
		raise DimensionMismatch(f"Expected vectors or a matrix of row vectors, got shape {z.shape}")
	if dim is not None and batch.shape[1] != dim:
		raise DimensionMismatch(f"Function of dimension {dim} evaluated at vectors of dimension {batch.shape[1]}")
	return batch


@dataclass(frozen=True)
class WeightFn:
	"""
	A nonnegative weight function.

	Univariate weights map a vector of k inputs to k weights. Multivariate
	weights map a d-vector to a single weight; evaluated at an m×d matrix they
	return one weight per row. Every evaluation is checked for the right
	shape and for negative weights.
	"""

	evaluator: Callable[[np.ndarray], Any]
	family: Family
	params: Params = ()
	multivariate: bool = False
	dim: Optional[int] = None
	vectorized: bool = True

	def __call__(self, z):
		z = np.asarray(z, dtype=np.float64)

		if self.multivariate:
			batch = _multivariate_batch(z, self.dim)
			if self.vectorized:
				out = np.asarray(self.evaluator(batch), dtype=np.float64)
			else:
				out = np.array([self._single(row) for row in batch], dtype=np.float64)
			out = self._checked(out, (batch.shape[0],))
			return float(out[0]) if z.ndim == 1 else out

		vector = np.atleast_1d(z)
		if vector.ndim != 1:
			raise DimensionMismatch(f"Univariate weight function evaluated at shape {z.shape}")
		out = self._checked(np.asarray(self.evaluator(vector), dtype=np.float64), vector.shape)
		return float(out[0]) if z.ndim == 0 else out

	def _single(self, row: np.ndarray) -> float:
		out = np.asarray(self.evaluator(row), dtype=np.float64)
		if out.size != 1:
			raise BadOutputShape(f"Multivariate weight function {self} must return a single value, got shape {out.shape}")
		return float(out.reshape(()))

	def _checked(self, out: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
		if out.shape != shape:
			raise BadOutputShape(f"Weight function {self} returned shape {out.shape}, expected {shape}")
		if np.any(np.isnan(out)):
			raise BadOutputShape(f"Weight function {self} returned NaN")
		if np.any(out < 0):
			raise NegativeWeight(f"Weight function {self} returned negative weights")
		return out

	def __str__(self) -> str:
		return _describe(self.family, self.params)


@dataclass(frozen=True)
class ChainFn:
	"""
	A chaining function.

	Univariate chains map k inputs to k outputs, multivariate chains map
	d-vectors to d-vectors (or an m×d matrix row by row).
	"""

	evaluator: Callable[[np.ndarray], Any]
	family: Family
	params: Params = ()
	multivariate: bool = False
	dim: Optional[int] = None
	vectorized: bool = True

	def __call__(self, z) -> np.ndarray:
		z = np.asarray(z, dtype=np.float64)

		if self.multivariate:
			batch = _multivariate_batch(z, self.dim)
			if self.vectorized:
				out = np.asarray(self.evaluator(batch), dtype=np.float64)
			else:
				out = np.array([self._single(row) for row in batch], dtype=np.float64).reshape(batch.shape[0], -1)
			out = self._checked(out, batch.shape)
			return out[0] if z.ndim == 1 else out

		vector = np.atleast_1d(z)
		if vector.ndim != 1:
			raise DimensionMismatch(f"Univariate chaining function evaluated at shape {z.shape}")
		out = self._checked(np.asarray(self.evaluator(vector), dtype=np.float64), vector.shape)
		return out[0] if z.ndim == 0 else out

	def _single(self, row: np.ndarray) -> np.ndarray:
		out = np.asarray(self.evaluator(row), dtype=np.float64)
		if out.shape != row.shape:
			raise BadOutputShape(f"Chaining function {self} maps shape {row.shape} to {out.shape}")
		return out

	def _checked(self, out: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
		if out.shape != shape:
			raise BadOutputShape(f"Chaining function {self} returned shape {out.shape}, expected {shape}")
		if not np.all(np.isfinite(out)):
			raise BadOutputShape(f"Chaining function {self} returned non-finite values")
		return out

	def decreases_on(self, values: np.ndarray) -> bool:
		"""
		Whether the chain decreases anywhere on the sorted `values`.
		"""
		if self.multivariate:
			raise DimensionMismatch(f"Monotonicity is only checked for univariate chains, got {self}")
		transformed = self(np.sort(np.asarray(values, dtype=np.float64)))
		return bool(np.any(np.diff(transformed) < 0))

	def __str__(self) -> str:
		return _describe(self.family, self.params)


# Parameter checks


def _check_location(mu) -> np.ndarray:
	mu = np.asarray(mu, dtype=np.float64)
	if mu.ndim > 1 or not np.all(np.isfinite(mu)):
		raise NonFiniteInput(f"Location must be finite, got {mu.tolist()}")
	return mu


def _check_scale(sigma) -> np.ndarray:
	sigma = np.asarray(sigma, dtype=np.float64)
	if sigma.ndim > 1 or not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
		raise NonPositiveScale(f"Scale must be positive and finite, got {sigma.tolist()}")
	return sigma


def _dim_of(*arrays: np.ndarray) -> Optional[int]:
	sizes = {array.size for array in arrays if array.ndim == 1}
	if 1 < len(sizes):
		raise DimensionMismatch(f"Per-dimension parameters have different lengths: {sorted(sizes)}")
	return sizes.pop() if sizes else None


def _univariate_params(*arrays: np.ndarray) -> None:
	if any(array.ndim != 0 for array in arrays):
		raise DimensionMismatch("Univariate function needs scalar parameters; pass multivariate=True for vectors")


# Evaluators


def _interval_weight(bounds: BoundsSpec, z: np.ndarray) -> np.ndarray:
	return bounds.contains(z).astype(np.float64)


def _orthant_weight(bounds: BoundsSpec, z: np.ndarray) -> np.ndarray:
	return np.all(bounds.contains(z), axis=-1).astype(np.float64)


def _clamp(bounds: BoundsSpec, z: np.ndarray) -> np.ndarray:
	return bounds.clamp(z)


def _identity(z: np.ndarray) -> np.ndarray:
	return np.array(z, dtype=np.float64)


def _gauss_cdf(mu: np.ndarray, sigma: np.ndarray, z: np.ndarray) -> np.ndarray:
	return norm.cdf(z, loc=mu, scale=sigma)


def _gauss_pdf(mu: np.ndarray, sigma: np.ndarray, z: np.ndarray) -> np.ndarray:
	return norm.pdf(z, loc=mu, scale=sigma)


def _gauss_cdf_chain(mu: np.ndarray, sigma: np.ndarray, z: np.ndarray) -> np.ndarray:
	return (z - mu) * norm.cdf(z, loc=mu, scale=sigma) + sigma ** 2 * norm.pdf(z, loc=mu, scale=sigma)


def _logistic_cdf(mu: np.ndarray, s: np.ndarray, z: np.ndarray) -> np.ndarray:
	return expit((z - mu) / s)


def _logistic_pdf(mu: np.ndarray, s: np.ndarray, z: np.ndarray) -> np.ndarray:
	return logistic.pdf(z, loc=mu, scale=s)


def _logistic_cdf_chain(mu: np.ndarray, s: np.ndarray, z: np.ndarray) -> np.ndarray:
	# s·log(1 + exp(u)) without overflow for large u
	return s * np.logaddexp(0.0, (z - mu) / s)


def _product(evaluator: Callable[[np.ndarray], np.ndarray], z: np.ndarray) -> np.ndarray:
	return np.prod(evaluator(z), axis=-1)


def _factors(fns: Tuple[WeightFn, ...], z: np.ndarray) -> np.ndarray:
	return np.prod(np.column_stack([fn(z[:, i]) for i, fn in enumerate(fns)]), axis=-1)


def _components(fns: Tuple[ChainFn, ...], z: np.ndarray) -> np.ndarray:
	return np.column_stack([fn(z[:, i]) for i, fn in enumerate(fns)])


# Built-in families


def interval_weight(bounds: BoundsSpec = BoundsSpec(), multivariate: bool = False) -> WeightFn:
	"""
	w(z) = 1{a < z < b}, strict at both ends; componentwise "all" for vectors.
	"""

	params = (('a', bounds.a), ('b', bounds.b))
	if multivariate:
		return WeightFn(partial(_orthant_weight, bounds), Family.INTERVAL, params, True, bounds.dim)
	bounds = bounds.univariate()
	return WeightFn(partial(_interval_weight, bounds), Family.INTERVAL, params)


def interval_chain(bounds: BoundsSpec = BoundsSpec(), multivariate: bool = False) -> ChainFn:
	"""
	v(z) = min(max(z, a), b), componentwise for vectors.

	Points inside the box are left alone, points outside are projected onto
	its border. Unbounded limits make this the identity.
	"""

	params = (('a', bounds.a), ('b', bounds.b))
	if not multivariate:
		bounds = bounds.univariate()
	evaluator = _identity if bounds.is_unbounded else partial(_clamp, bounds)
	if multivariate:
		return ChainFn(evaluator, Family.INTERVAL, params, True, bounds.dim)
	return ChainFn(evaluator, Family.INTERVAL, params)


def _smooth_weight(family: Family, evaluator, mu, sigma, multivariate: bool) -> WeightFn:
	mu = _check_location(mu)
	sigma = _check_scale(sigma)
	params = (('mu', mu), ('sigma', sigma))
	if multivariate:
		dim = _dim_of(mu, sigma)
		return WeightFn(partial(_product, partial(evaluator, mu, sigma)), family, params, True, dim)
	_univariate_params(mu, sigma)
	return WeightFn(partial(evaluator, mu, sigma), family, params)


def _smooth_chain(family: Family, evaluator, mu, sigma, multivariate: bool) -> ChainFn:
	mu = _check_location(mu)
	sigma = _check_scale(sigma)
	params = (('mu', mu), ('sigma', sigma))
	if multivariate:
		return ChainFn(partial(evaluator, mu, sigma), family, params, True, _dim_of(mu, sigma))
	_univariate_params(mu, sigma)
	return ChainFn(partial(evaluator, mu, sigma), family, params)


def gauss_cdf_weight(mu=0.0, sigma=1.0, multivariate: bool = False) -> WeightFn:
	return _smooth_weight(Family.GAUSS_CDF, _gauss_cdf, mu, sigma, multivariate)


def gauss_cdf_chain(mu=0.0, sigma=1.0, multivariate: bool = False) -> ChainFn:
	return _smooth_chain(Family.GAUSS_CDF, _gauss_cdf_chain, mu, sigma, multivariate)


def gauss_pdf_weight(mu=0.0, sigma=1.0, multivariate: bool = False) -> WeightFn:
	return _smooth_weight(Family.GAUSS_PDF, _gauss_pdf, mu, sigma, multivariate)


def gauss_pdf_chain(mu=0.0, sigma=1.0, multivariate: bool = False) -> ChainFn:
	return _smooth_chain(Family.GAUSS_PDF, _gauss_cdf, mu, sigma, multivariate)


def logistic_cdf_weight(mu=0.0, s=1.0, multivariate: bool = False) -> WeightFn:
	return _smooth_weight(Family.LOGISTIC_CDF, _logistic_cdf, mu, s, multivariate)


def logistic_cdf_chain(mu=0.0, s=1.0, multivariate: bool = False) -> ChainFn:
	return _smooth_chain(Family.LOGISTIC_CDF, _logistic_cdf_chain, mu, s, multivariate)


def logistic_pdf_weight(mu=0.0, s=1.0, multivariate: bool = False) -> WeightFn:
	return _smooth_weight(Family.LOGISTIC_PDF, _logistic_pdf, mu, s, multivariate)


def logistic_pdf_chain(mu=0.0, s=1.0, multivariate: bool = False) -> ChainFn:
	return _smooth_chain(Family.LOGISTIC_PDF, _logistic_cdf, mu, s, multivariate)


def product_weight(fns: Sequence[WeightFn]) -> WeightFn:
	"""
	w(z) = Π_i w_i(z_i) from d univariate weight functions.
	"""

	fns = tuple(fns)
	if not fns or any(fn.multivariate for fn in fns):
		raise DimensionMismatch("A product weight needs one univariate weight function per dimension")
	params = tuple((f"w{i + 1}", str(fn)) for i, fn in enumerate(fns))
	return WeightFn(partial(_factors, fns), Family.PRODUCT, params, True, len(fns))


def componentwise_chain(fns: Sequence[ChainFn]) -> ChainFn:
	"""
	v(z)_i = v_i(z_i) from d univariate chaining functions.
	"""

	fns = tuple(fns)
	if not fns or any(fn.multivariate for fn in fns):
		raise DimensionMismatch("A componentwise chain needs one univariate chaining function per dimension")
	params = tuple((f"v{i + 1}", str(fn)) for i, fn in enumerate(fns))
	return ChainFn(partial(_components, fns), Family.PRODUCT, params, True, len(fns))


# Caller-supplied functions


def _name_of(fn: Callable) -> str:
	return getattr(fn, '__name__', type(fn).__name__)


def custom_weight(fn: Callable, multivariate: bool = False, dim: Optional[int] = None) -> WeightFn:
	"""
	Wrap a caller-supplied weight function.

	A univariate `fn` takes a vector and returns a vector of the same length;
	a multivariate `fn` takes one d-vector and returns a single number. The
	wrapper rejects negative weights and malformed outputs at evaluation time.
	`fn` must be pure.
	"""

	if not callable(fn):
		raise TypeError(f"Not callable: {fn!r}")
	return WeightFn(fn, Family.CUSTOM, (('fn', _name_of(fn)),), multivariate, dim, vectorized=not multivariate)


def custom_chain(fn: Callable, multivariate: bool = False, dim: Optional[int] = None) -> ChainFn:
	"""
	Wrap a caller-supplied chaining function.

	A univariate `fn` maps a vector to a vector of the same length; a
	multivariate `fn` maps one d-vector to a d-vector. Univariate chains are
	checked for monotonicity on the data they are applied to, which only ever
	warns.
	"""

	if not callable(fn):
		raise TypeError(f"Not callable: {fn!r}")
	return ChainFn(fn, Family.CUSTOM, (('fn', _name_of(fn)),), multivariate, dim, vectorized=not multivariate)


# Families by name


PAIRS = {
	Family.GAUSS_CDF: (gauss_cdf_weight, gauss_cdf_chain),
	Family.GAUSS_PDF: (gauss_pdf_weight, gauss_pdf_chain),
	Family.LOGISTIC_CDF: (logistic_cdf_weight, logistic_cdf_chain),
	Family.LOGISTIC_PDF: (logistic_pdf_weight, logistic_pdf_chain),
}


def family_pair(
	family: Family,
	a=-math.inf,
	b=math.inf,
	mu=0.0,
	sigma=1.0,
	multivariate: bool = False,
) -> Tuple[WeightFn, ChainFn]:
	"""
	The (weight, chain) pair of a built-in family.

	The interval family uses `a` and `b`, the smooth families `mu` and
	`sigma` (the logistic scale for the logistic families).
	"""

	if family is Family.INTERVAL:
		bounds = BoundsSpec(a, b)
		return interval_weight(bounds, multivariate), interval_chain(bounds, multivariate)
	try:
		weight, chain = PAIRS[family]
	except KeyError:
		raise ValueError(f"Not a built-in family: {family.value}")
	return weight(mu, sigma, multivariate), chain(mu, sigma, multivariate)
