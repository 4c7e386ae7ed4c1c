"""
Archive-level aggregation of scores.

Undefined scores (an outcome-weighted score whose forecast has no weight
mass where the outcome fell, or a case that could not be scored) are counted
and excluded from means, never averaged in.
"""

import csv
import logging
import math

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple, TypeVar

import numpy as np

from tqdm import tqdm
from tqdm.contrib.concurrent import thread_map

from wsr.core import (
	AllUndefined,
	BadGrid,
	EnsembleForecast,
	Forecast,
	Observation,
	ScoreValue,
	ScoringError,
	Status,
)
from wsr.uniscore import owcrps_sample, twcrps_sample


logger = logging.getLogger(__name__)


Case = Tuple[Observation, Forecast]
Scorer = Callable[[Observation, Forecast], ScoreValue]

T = TypeVar('T')
R = TypeVar('R')


def format_number(value: float, digits: int = 17) -> str:
	if math.isnan(value):
		return 'nan'
	return f"{value:.{digits}g}"


def _map(fn: Callable[[T], R], items: Sequence[T], workers: int, progress: bool, desc: str) -> List[R]:
	# Results come back in input order whatever the number of workers.
	if workers <= 1:
		return [fn(item) for item in tqdm(items, desc=desc, unit='case', disable=not progress)]
	return thread_map(
		fn,
		items,
		max_workers=workers,
		chunksize=max(1, len(items) // (4 * workers)),
		desc=desc,
		unit='case',
		disable=not progress,
	)


def score_case(scorer: Scorer, obs: Observation, fc: Forecast, **kwargs) -> ScoreValue:
	"""
	Score one case, turning scoring errors into an InvalidInput score.
	"""
	try:
		return scorer(obs, fc, **kwargs)
	except ScoringError as e:
		logger.debug("Case not scored: %s", e)
		return ScoreValue.invalid_input(str(e))


def score_archive(
	archive: Sequence[Case],
	scorer: Scorer,
	case_ids: Optional[Iterable[str]] = None,
	workers: int = 1,
	progress: bool = False,
) -> 'ScoreTable':
	"""
	Score every case of an archive, in archive order.

	Cases that cannot be scored get an InvalidInput score instead of aborting
	the run. The table has a NaN mean if no score is defined.
	"""
	scores = _map(lambda case: score_case(scorer, *case), list(archive), workers, progress, desc="Scoring")
	return summarize(scores, case_ids, allow_all_undefined=True)


# Summaries


@dataclass(frozen=True)
class ScoreTable:
	case_ids: Tuple[str, ...]
	scores: Tuple[ScoreValue, ...]
	mean_defined: float
	n_undefined: int

	@property
	def n(self) -> int:
		return len(self.scores)

	@property
	def n_defined(self) -> int:
		return self.n - self.n_undefined

	@property
	def warnings(self) -> Tuple[Tuple[str, ...], ...]:
		return tuple(score.warnings for score in self.scores)

	@property
	def status_counts(self) -> Dict[Status, int]:
		counts = Counter(score.status for score in self.scores)
		return {status: counts.get(status, 0) for status in Status}

	@property
	def warning_counts(self) -> Dict[str, int]:
		# The warnings of an InvalidInput score hold the reason, not flags.
		flags = (
			flag
			for score in self.scores if score.status is not Status.INVALID_INPUT
			for flag in score.warnings
		)
		return dict(Counter(flags))

	def write_csv(self, stream: TextIO, digits: int = 17, metadata: Optional[Dict[str, Any]] = None) -> None:
		"""
		One `case_id,score,status` row per case, then `#`-prefixed summary lines.
		"""

		writer = csv.writer(stream, lineterminator='\n')
		writer.writerow(['case_id', 'score', 'status'])
		for case_id, score in zip(self.case_ids, self.scores):
			writer.writerow([case_id, format_number(score.value, digits), score.status.value])
		stream.write(f"# n={self.n}\n")
		stream.write(f"# n_defined={self.n_defined}\n")
		stream.write(f"# n_undefined={self.n_undefined}\n")
		stream.write(f"# mean_defined={format_number(self.mean_defined, digits)}\n")
		for name, value in (metadata or {}).items():
			stream.write(f"# {name}={value}\n")

	def to_dict(self, metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
		def number(value: float) -> Optional[float]:
			return None if math.isnan(value) else value

		return {
			'cases': [
				{
					'case_id': case_id,
					'score': number(score.value),
					'status': score.status.value,
					'warnings': list(score.warnings),
				}
				for case_id, score in zip(self.case_ids, self.scores)
			],
			'summary': {
				'n': self.n,
				'n_defined': self.n_defined,
				'n_undefined': self.n_undefined,
				'mean_defined': number(self.mean_defined),
				'status_counts': {status.value: count for status, count in self.status_counts.items()},
			},
			'metadata': metadata or {},
		}


def summarize(
	scores: Sequence[ScoreValue],
	case_ids: Optional[Iterable[str]] = None,
	allow_all_undefined: bool = False,
) -> ScoreTable:
	"""
	Mean over the Defined scores, with the number of other scores.

	The mean is exactly rounded, so it does not depend on the order of the
	cases. Raises `AllUndefined` if no score is Defined, unless
	`allow_all_undefined` is set, in which case the mean is NaN.
	"""

	scores = tuple(scores)
	if not scores:
		raise AllUndefined("Nothing to summarize")
	if case_ids is None:
		case_ids = (str(i) for i in range(1, len(scores) + 1))
	case_ids = tuple(case_ids)
	if len(case_ids) != len(scores):
		raise ValueError(f"{len(case_ids)} case ids for {len(scores)} scores")

	defined = [score.value for score in scores if score.is_defined]
	if defined:
		mean = math.fsum(defined) / len(defined)
	elif allow_all_undefined:
		mean = math.nan
	else:
		raise AllUndefined(f"None of the {len(scores)} scores is defined")

	return ScoreTable(case_ids, scores, mean, len(scores) - len(defined))


# Score against threshold


class Side(Enum):
	ABOVE = 'above'  # a = t, b = ∞
	BELOW = 'below'  # a = −∞, b = t

	def bounds(self, threshold: float) -> Tuple[float, float]:
		if self is Side.ABOVE:
			return threshold, math.inf
		return -math.inf, threshold


class CurveKind(Enum):
	TWCRPS = 'twcrps'
	OWCRPS = 'owcrps'

	@property
	def scorer(self) -> Scorer:
		return {
			CurveKind.TWCRPS: twcrps_sample,
			CurveKind.OWCRPS: owcrps_sample,
		}[self]


def check_grid(grid: Iterable[float]) -> np.ndarray:
	grid = np.asarray(list(grid), dtype=np.float64)
	if grid.ndim != 1 or grid.size == 0:
		raise BadGrid("The threshold grid must not be empty")
	if not np.all(np.isfinite(grid)):
		raise BadGrid("Thresholds must be finite")
	if np.any(np.diff(grid) <= 0):
		raise BadGrid("Thresholds must be strictly increasing")
	return grid


def parse_grid(text: str) -> np.ndarray:
	"""
	Parse `start:stop:step` into a grid that includes `stop` if the steps
	land on it.
	"""

	try:
		start, stop, step = (float(part) for part in text.split(':'))
	except ValueError:
		raise BadGrid(f"Expected a grid as start:stop:step, got '{text}'")
	if not all(map(math.isfinite, (start, stop, step))):
		raise BadGrid(f"Grid bounds and step must be finite, got '{text}'")
	if step <= 0:
		raise BadGrid(f"Grid step must be positive, got {step}")
	if stop < start:
		raise BadGrid(f"Grid stop {stop} is smaller than start {start}")
	count = int(math.floor((stop - start) / step + 1e-9)) + 1
	return check_grid(start + step * np.arange(count))


@dataclass(frozen=True)
class ThresholdCurve:
	thresholds: np.ndarray
	mean_scores: np.ndarray
	n_undefined: np.ndarray
	kind: CurveKind
	side: Side

	def rows(self) -> Iterator[Tuple[float, float, int]]:
		for threshold, mean, undefined in zip(self.thresholds, self.mean_scores, self.n_undefined):
			yield float(threshold), float(mean), int(undefined)

	def write_csv(self, stream: TextIO, digits: int = 17) -> None:
		writer = csv.writer(stream, lineterminator='\n')
		writer.writerow(['threshold', 'mean_score', 'n_undefined'])
		for threshold, mean, undefined in self.rows():
			writer.writerow([format_number(threshold, digits), format_number(mean, digits), undefined])


def threshold_curve(
	archive: Sequence[Tuple[Observation, EnsembleForecast]],
	kind: CurveKind,
	grid: Iterable[float],
	side: Side = Side.ABOVE,
	workers: int = 1,
	progress: bool = False,
) -> ThresholdCurve:
	"""
	Mean twCRPS or owCRPS of an archive for each threshold of a grid.

	Each threshold t scores every case with the interval weight (or clamp
	chain) on (t, ∞) for `side=ABOVE` or (−∞, t) for `side=BELOW`. Thresholds
	at which no score is defined get a NaN mean.
	"""

	grid = check_grid(grid)
	archive = list(archive)
	if not archive:
		raise AllUndefined("Cannot compute a curve for an empty archive")

	def score(pair: Tuple[float, Case]) -> ScoreValue:
		threshold, (obs, fc) = pair
		a, b = side.bounds(threshold)
		return score_case(kind.scorer, obs, fc, a=a, b=b)

	pairs = [(float(threshold), case) for threshold in grid for case in archive]
	values = _map(score, pairs, workers, progress, desc=f"{kind.value} curve")

	n = len(archive)
	means = np.empty(grid.size)
	undefined = np.empty(grid.size, dtype=np.int64)
	for i, threshold in enumerate(grid):
		table = summarize(values[i * n:(i + 1) * n], allow_all_undefined=True)
		if table.n_defined == 0:
			logger.debug("No defined %s score at threshold %g", kind.value, threshold)
		means[i] = table.mean_defined
		undefined[i] = table.n_undefined

	return ThresholdCurve(grid, means, undefined, kind, side)
