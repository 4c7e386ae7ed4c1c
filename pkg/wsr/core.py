"""
Data model shared by the scoring modules.

Forecasts, observations, bounds of the default weight function and score
results live here, together with the validation every scoring operation runs
before touching the data.
"""

import math

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from django.core.exceptions import ValidationError


ArrayLike = Union[float, Sequence[float], Sequence[Sequence[float]], np.ndarray]


# Errors


class ScoringError(ValidationError):
	"""
	Base class of all errors raised by the scoring engine.

	Each subclass carries a stable `code`, so callers can dispatch on either
	the class or the code, as with any other Django validation error.
	"""

	code = 'invalid'

	def __init__(self, message: str):
		super().__init__(message, code=self.code)

	def __str__(self) -> str:
		return '; '.join(self.messages)


class DimensionMismatch(ScoringError):
	code = 'dimension_mismatch'


class NonFiniteInput(ScoringError):
	code = 'non_finite_input'


class BadMemberWeights(ScoringError):
	code = 'bad_member_weights'


class BadBounds(ScoringError):
	code = 'bad_bounds'


class NonPositiveScale(ScoringError):
	code = 'non_positive_scale'


class NegativeWeight(ScoringError):
	code = 'negative_weight'


class BadOutputShape(ScoringError):
	code = 'bad_output_shape'


class DegenerateSample(ScoringError):
	code = 'degenerate_sample'


class TooFewMembers(ScoringError):
	code = 'too_few_members'


class BadVsWeights(ScoringError):
	code = 'bad_vs_weights'


class BadOrder(ScoringError):
	code = 'bad_order'


class AllUndefined(ScoringError):
	code = 'all_undefined'


class BadGrid(ScoringError):
	code = 'bad_grid'


class DecreasingChainWarning(UserWarning):
	"""
	A univariate chaining function decreased somewhere on the evaluated data.

	The score is still computed, but it no longer is a threshold-weighted CRPS
	in the usual sense.
	"""


DECREASING_CHAIN = 'decreasing-chain'


def _frozen(array: np.ndarray) -> np.ndarray:
	array = np.array(array, dtype=np.float64)
	array.flags.writeable = False
	return array


# Results


class Status(Enum):
	DEFINED = 'defined'
	UNDEFINED_WEIGHT_MASS = 'undefined-weight-mass'
	INVALID_INPUT = 'invalid-input'


@dataclass(frozen=True)
class ScoreValue:
	value: float
	status: Status = Status.DEFINED
	warnings: Tuple[str, ...] = ()

	def __post_init__(self):
		value = float(self.value)
		if self.status is Status.DEFINED:
			if not math.isfinite(value):
				raise NonFiniteInput(f"Score is not finite: {value}")
		else:
			value = math.nan
		object.__setattr__(self, 'value', value)

	@classmethod
	def undefined_weight_mass(cls, warnings: Tuple[str, ...] = ()) -> 'ScoreValue':
		return cls(math.nan, Status.UNDEFINED_WEIGHT_MASS, warnings)

	@classmethod
	def invalid_input(cls, reason: str) -> 'ScoreValue':
		return cls(math.nan, Status.INVALID_INPUT, (reason,))

	@property
	def is_defined(self) -> bool:
		return self.status is Status.DEFINED

	def with_warnings(self, *warnings: str) -> 'ScoreValue':
		if not warnings:
			return self
		return replace(self, warnings=self.warnings + tuple(warnings))

	def __float__(self) -> float:
		return self.value


# Forecasts and observations


def normalize_member_weights(weights: ArrayLike) -> np.ndarray:
	"""
	Scale nonnegative member weights so that they sum to one.
	"""

	weights = np.asarray(weights, dtype=np.float64)
	if weights.ndim != 1 or weights.size == 0:
		raise BadMemberWeights(f"Member weights must be a non-empty vector, got shape {weights.shape}")
	if not np.all(np.isfinite(weights)):
		raise BadMemberWeights("Member weights must be finite")
	if np.any(weights < 0):
		raise BadMemberWeights("Member weights must not be negative")
	total = weights.sum()
	if not total > 0:
		raise BadMemberWeights("Member weights must not sum to zero")
	return weights / total


def _member_weights(weights: Optional[ArrayLike], m: int) -> np.ndarray:
	if weights is None:
		return normalize_member_weights(np.ones(m))
	weights = np.asarray(weights, dtype=np.float64)
	if weights.shape != (m,):
		raise BadMemberWeights(f"Expected {m} member weights, got shape {weights.shape}")
	return normalize_member_weights(weights)


@dataclass(frozen=True)
class EnsembleForecast:
	"""
	An m-member univariate predictive sample.

	`member_weights` always holds normalized weights after construction;
	omitting them is the same as passing uniform weights.
	"""

	members: np.ndarray
	member_weights: Optional[np.ndarray] = None

	def __post_init__(self):
		members = np.asarray(self.members, dtype=np.float64)
		if members.ndim != 1:
			raise DimensionMismatch(f"A univariate ensemble must be a vector, got shape {members.shape}")
		if members.size < 1:
			raise TooFewMembers("An ensemble needs at least one member")
		if not np.all(np.isfinite(members)):
			raise NonFiniteInput("Ensemble members must be finite")
		object.__setattr__(self, 'members', _frozen(members))
		object.__setattr__(self, 'member_weights', _frozen(_member_weights(self.member_weights, members.size)))

	@property
	def m(self) -> int:
		return self.members.size

	@property
	def weights(self) -> np.ndarray:
		return self.member_weights

	@classmethod
	def coerce(cls, value: Union['EnsembleForecast', ArrayLike]) -> 'EnsembleForecast':
		if isinstance(value, cls):
			return value
		return cls(np.atleast_1d(np.asarray(value, dtype=np.float64)))


@dataclass(frozen=True)
class MultivariateEnsemble:
	"""
	A d×m matrix whose columns are the sampled d-dimensional forecast vectors.
	"""

	members: np.ndarray
	member_weights: Optional[np.ndarray] = None

	def __post_init__(self):
		members = np.asarray(self.members, dtype=np.float64)
		if members.ndim != 2:
			raise DimensionMismatch(f"A multivariate ensemble must be a d×m matrix, got shape {members.shape}")
		if members.shape[0] < 1:
			raise DimensionMismatch("A multivariate ensemble needs at least one dimension")
		if members.shape[1] < 1:
			raise TooFewMembers("An ensemble needs at least one member")
		if not np.all(np.isfinite(members)):
			raise NonFiniteInput("Ensemble members must be finite")
		object.__setattr__(self, 'members', _frozen(members))
		object.__setattr__(self, 'member_weights', _frozen(_member_weights(self.member_weights, members.shape[1])))

	@property
	def dim(self) -> int:
		return self.members.shape[0]

	@property
	def m(self) -> int:
		return self.members.shape[1]

	@property
	def weights(self) -> np.ndarray:
		return self.member_weights

	@property
	def columns(self) -> np.ndarray:
		"""
		The sampled vectors as an m×d array, row j being x_j.
		"""
		return self.members.T

	@classmethod
	def coerce(cls, value: Union['MultivariateEnsemble', ArrayLike]) -> 'MultivariateEnsemble':
		if isinstance(value, cls):
			return value
		return cls(np.asarray(value, dtype=np.float64))


@dataclass(frozen=True)
class Observation:
	"""
	A realized outcome: a scalar (univariate) or a vector of d reals.
	"""

	value: np.ndarray

	def __post_init__(self):
		value = np.asarray(self.value, dtype=np.float64)
		if value.ndim > 1:
			raise DimensionMismatch(f"An observation must be a scalar or a vector, got shape {value.shape}")
		if not np.all(np.isfinite(value)):
			raise NonFiniteInput("Observations must be finite")
		object.__setattr__(self, 'value', _frozen(value))

	@property
	def is_multivariate(self) -> bool:
		return self.value.ndim == 1

	@property
	def dim(self) -> int:
		return self.value.size

	@classmethod
	def coerce(cls, value: Union['Observation', ArrayLike]) -> 'Observation':
		if isinstance(value, cls):
			return value
		return cls(np.asarray(value, dtype=np.float64))


Forecast = Union[EnsembleForecast, MultivariateEnsemble]


def validate_case(obs: Observation, fc: Forecast) -> None:
	"""
	Check that an observation can be scored against a forecast.

	Finiteness and member weights are already checked when the objects are
	built; this adds the checks that need both of them.
	"""

	if not np.all(np.isfinite(obs.value)):
		raise NonFiniteInput("Observations must be finite")

	if isinstance(fc, EnsembleForecast):
		if obs.is_multivariate:
			raise DimensionMismatch(f"Univariate forecast scored against an observation of dimension {obs.dim}")
		if not np.all(np.isfinite(fc.members)):
			raise NonFiniteInput("Ensemble members must be finite")
		if fc.member_weights.shape != fc.members.shape:
			raise BadMemberWeights(f"Expected {fc.m} member weights, got {fc.member_weights.size}")
		return

	if isinstance(fc, MultivariateEnsemble):
		if not obs.is_multivariate or obs.dim != fc.dim:
			raise DimensionMismatch(f"Observation of dimension {obs.dim} scored against a forecast of dimension {fc.dim}")
		if not np.all(np.isfinite(fc.members)):
			raise NonFiniteInput("Ensemble members must be finite")
		if fc.member_weights.shape != (fc.m,):
			raise BadMemberWeights(f"Expected {fc.m} member weights, got {fc.member_weights.size}")
		return

	raise TypeError(f"Not a forecast: {fc!r}")


def univariate_case(obs, fc) -> Tuple[float, EnsembleForecast]:
	observation = Observation.coerce(obs)
	forecast = EnsembleForecast.coerce(fc)
	validate_case(observation, forecast)
	return float(observation.value), forecast


def multivariate_case(obs, fc) -> Tuple[np.ndarray, MultivariateEnsemble]:
	forecast = MultivariateEnsemble.coerce(fc)
	observation = Observation.coerce(obs)
	validate_case(observation, forecast)
	return observation.value, forecast


# Default weight region


@dataclass(frozen=True)
class BoundsSpec:
	"""
	Lower and upper bounds of the region a < z < b, per dimension.

	Scalars broadcast to every dimension, so the same bounds serve univariate
	and multivariate data.
	"""

	a: np.ndarray = -math.inf
	b: np.ndarray = math.inf

	def __post_init__(self):
		a = np.asarray(self.a, dtype=np.float64)
		b = np.asarray(self.b, dtype=np.float64)
		if a.ndim > 1 or b.ndim > 1:
			raise DimensionMismatch("Bounds must be scalars or vectors")
		if a.ndim == 1 and b.ndim == 1 and a.size != b.size:
			raise DimensionMismatch(f"Bounds a and b have different lengths: {a.size} != {b.size}")
		if np.any(np.isnan(a)) or np.any(np.isnan(b)):
			raise BadBounds("Bounds must not be NaN")
		if np.any(a >= b):
			raise BadBounds(f"The lower bound a must be smaller than the upper bound b (a={a.tolist()}, b={b.tolist()})")
		object.__setattr__(self, 'a', _frozen(a))
		object.__setattr__(self, 'b', _frozen(b))

	@property
	def dim(self) -> Optional[int]:
		"""
		Number of dimensions, or `None` if both bounds are scalars.
		"""
		if self.a.ndim == 1:
			return self.a.size
		if self.b.ndim == 1:
			return self.b.size
		return None

	@property
	def is_unbounded(self) -> bool:
		return bool(np.all(self.a == -math.inf) and np.all(self.b == math.inf))

	def broadcast(self, dim: int) -> 'BoundsSpec':
		if self.dim is not None and self.dim != dim:
			raise DimensionMismatch(f"Bounds of dimension {self.dim} used for data of dimension {dim}")
		return BoundsSpec(np.broadcast_to(self.a, (dim,)), np.broadcast_to(self.b, (dim,)))

	def contains(self, z: np.ndarray) -> np.ndarray:
		return (self.a < z) & (z < self.b)

	def clamp(self, z: np.ndarray) -> np.ndarray:
		return np.minimum(np.maximum(z, self.a), self.b)

	def univariate(self) -> 'BoundsSpec':
		"""
		These bounds as scalars, for univariate data.
		"""
		if self.dim is None:
			return self
		if self.dim != 1:
			raise DimensionMismatch(f"Univariate data needs scalar bounds, got dimension {self.dim}")
		return BoundsSpec(self.a.reshape(-1)[0], self.b.reshape(-1)[0])
