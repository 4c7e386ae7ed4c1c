"""
Gaussian kernel density estimates of ensemble forecasts.

The likelihood-based scores need a predictive density (and, for the censored
likelihood score, the probability of a region), which a finite sample does
not have. Both come from a Gaussian mixture centred on the members; the CDF
is evaluated exactly, never by quadrature.
"""

import logging
import math

from dataclasses import dataclass
from typing import Optional

import numpy as np

from scipy.special import log_ndtr, logsumexp, ndtr
from scipy.stats import iqr, norm

from wsr.core import (
	ArrayLike,
	DegenerateSample,
	EnsembleForecast,
	NonPositiveScale,
	TooFewMembers,
)


logger = logging.getLogger(__name__)


SILVERMAN_COEFFICIENT = 0.9
IQR_TO_SD = 1.34


def default_bandwidth(members: ArrayLike) -> float:
	"""
	Silverman's rule of thumb: 0.9 · min(sd, IQR/1.34) · m^(-1/5).

	Falls back to the standard deviation if the interquartile range is zero.
	"""

	members = np.asarray(members, dtype=np.float64)
	m = members.size
	if m < 2:
		raise TooFewMembers(f"A default bandwidth needs at least two members, got {m}; pass a bandwidth explicitly")

	sd = float(np.std(members, ddof=1))
	spread = float(iqr(members)) / IQR_TO_SD
	if sd == 0:
		raise DegenerateSample("All members are equal; the default bandwidth is undefined")
	scale = min(sd, spread) if 0 < spread else sd
	return SILVERMAN_COEFFICIENT * scale * m ** (-1 / 5)


@dataclass(frozen=True)
class KdeModel:
	centers: np.ndarray
	bandwidth: float
	weights: np.ndarray

	def __post_init__(self):
		if not (np.isfinite(self.bandwidth) and 0 < self.bandwidth):
			raise NonPositiveScale(f"Bandwidth must be positive and finite, got {self.bandwidth}")

	@classmethod
	def from_ensemble(cls, fc: EnsembleForecast, bw: Optional[float] = None) -> 'KdeModel':
		if bw is None:
			bw = default_bandwidth(fc.members)
			logger.debug("Default bandwidth %.6g for %d members", bw, fc.m)
		return cls(fc.members, float(bw), fc.weights)

	def density(self, z: float) -> float:
		kernels = norm.pdf((z - self.centers) / self.bandwidth)
		return float(np.sum(self.weights * kernels)) / self.bandwidth

	def logdensity(self, z: float) -> float:
		"""
		log density(z), finite far beyond the members where density(z) underflows.
		"""
		kernels = norm.logpdf((z - self.centers) / self.bandwidth)
		return float(logsumexp(kernels, b=self.weights)) - math.log(self.bandwidth)

	def cdf(self, z: float) -> float:
		return float(np.sum(self.weights * ndtr((z - self.centers) / self.bandwidth)))

	def logcdf(self, z: float) -> float:
		return float(logsumexp(log_ndtr((z - self.centers) / self.bandwidth), b=self.weights))

	def sf(self, z: float) -> float:
		"""
		1 − cdf(z), without cancellation in the upper tail.
		"""
		return float(np.sum(self.weights * ndtr((self.centers - z) / self.bandwidth)))

	def logsf(self, z: float) -> float:
		return float(logsumexp(log_ndtr((self.centers - z) / self.bandwidth), b=self.weights))


def density(model: KdeModel, z: float) -> float:
	return model.density(z)


def cdf(model: KdeModel, z: float) -> float:
	return model.cdf(z)
