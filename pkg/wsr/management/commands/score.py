import csv
import io
import json
import logging
import math
import re
import sys

from dataclasses import dataclass, replace
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from wsr import multiscore, uniscore
from wsr.core import (
	BoundsSpec,
	DimensionMismatch,
	EnsembleForecast,
	MultivariateEnsemble,
	Observation,
	ScoringError,
	Status,
	validate_case,
)
from wsr.diagnostics import Case, Scorer, ScoreTable, score_archive
from wsr.multiscore import VsParams
from wsr.weightfns import Family, family_pair


EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_STRICT = 3

DEFAULT_DIGITS = 17

# argparse treats `-inf` and grids like `-3:3:0.5` as options unless told otherwise.
NUMBER = r'(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?|inf(inity)?'
NEGATIVE_NUMBER = re.compile(rf'^-({NUMBER})(:[-+]?({NUMBER})){{0,2}}$', re.IGNORECASE)


class ParseError(ScoringError):
	code = 'parse_error'


class EmptyArchive(ScoringError):
	code = 'empty_archive'


class ConfigError(ScoringError):
	code = 'bad_config'


# Score kinds


class Kind(Enum):
	CRPS = 'crps'
	LOGS = 'logs'
	TWCRPS = 'twcrps'
	OWCRPS = 'owcrps'
	COLS = 'cols'
	CELS = 'cels'
	ES = 'es'
	VS = 'vs'
	MMDS = 'mmds'
	OWES = 'owes'
	OWVS = 'owvs'
	OWMMDS = 'owmmds'
	TWES = 'twes'
	TWVS = 'twvs'
	TWMMDS = 'twmmds'

	@property
	def is_multivariate(self) -> bool:
		return self not in UNIVARIATE

	@property
	def is_weighted(self) -> bool:
		return self in OUTCOME_WEIGHTED or self in THRESHOLD_WEIGHTED or self in LIKELIHOOD


UNIVARIATE = {Kind.CRPS, Kind.LOGS, Kind.TWCRPS, Kind.OWCRPS, Kind.COLS, Kind.CELS}
OUTCOME_WEIGHTED = {Kind.OWCRPS, Kind.OWES, Kind.OWVS, Kind.OWMMDS}
THRESHOLD_WEIGHTED = {Kind.TWCRPS, Kind.TWES, Kind.TWVS, Kind.TWMMDS}
LIKELIHOOD = {Kind.COLS, Kind.CELS}
BANDWIDTH = {Kind.LOGS, Kind.COLS, Kind.CELS}
VARIOGRAM = {Kind.VS, Kind.OWVS, Kind.TWVS}

WEIGHT_FAMILIES = [
	Family.INTERVAL,
	Family.GAUSS_CDF,
	Family.GAUSS_PDF,
	Family.LOGISTIC_CDF,
	Family.LOGISTIC_PDF,
]


@dataclass(frozen=True)
class RunConfig:
	"""
	What to score and how, as given on the command line.

	Parameters that were not given are `None`; `check` rejects parameters
	that do not apply to the score kind.
	"""

	kind: Kind
	weight_family: Optional[Family] = None
	a: Optional[Tuple[float, ...]] = None
	b: Optional[Tuple[float, ...]] = None
	mu: Optional[Tuple[float, ...]] = None
	sigma: Optional[Tuple[float, ...]] = None
	bw: Optional[float] = None
	p: Optional[float] = None
	vs_weights: Optional[np.ndarray] = None
	output_format: str = 'csv'
	digits: int = DEFAULT_DIGITS
	strict: bool = False

	def check(self) -> 'RunConfig':
		kind = self.kind
		name = kind.value

		weighting = {
			'--weight-family': self.weight_family,
			'--a': self.a,
			'--b': self.b,
			'--mu': self.mu,
			'--sigma': self.sigma,
		}
		if not kind.is_weighted:
			given = [flag for flag, value in weighting.items() if value is not None]
			if given:
				raise ConfigError(f"{', '.join(given)} only apply to weighted scores, not {name}")

		family = self.weight_family or Family.INTERVAL
		if kind.is_weighted:
			if kind in LIKELIHOOD and family is not Family.INTERVAL:
				raise ConfigError(f"{name} only supports the interval weight")
			if family is Family.INTERVAL and (self.mu is not None or self.sigma is not None):
				raise ConfigError("--mu and --sigma only apply to the smooth weight families")
			if family is not Family.INTERVAL and (self.a is not None or self.b is not None):
				raise ConfigError(f"--a and --b only apply to the interval weight, not {family.value}")

		if self.bw is not None:
			if kind not in BANDWIDTH:
				raise ConfigError(f"--bw only applies to logs, cols and cels, not {name}")
			if not (math.isfinite(self.bw) and 0 < self.bw):
				raise ConfigError(f"Bandwidth must be positive and finite, got {self.bw}")

		if (self.p is not None or self.vs_weights is not None) and kind not in VARIOGRAM:
			raise ConfigError(f"--p and --vs-weights only apply to variogram scores, not {name}")

		if not 1 <= self.digits <= 17:
			raise ConfigError(f"--digits must be between 1 and 17, got {self.digits}")

		if self.output_format not in ('csv', 'json'):
			raise ConfigError(f"Unknown output format: {self.output_format}")

		return replace(self, weight_family=family if kind.is_weighted else None)

	@property
	def vs_params(self) -> VsParams:
		p = multiscore.DEFAULT_VS_ORDER if self.p is None else self.p
		return VsParams(p, self.vs_weights)

	def metadata(self) -> Dict[str, Any]:
		metadata: Dict[str, Any] = {'kind': self.kind.value}
		if self.kind.is_weighted:
			metadata['weight'] = str(self.weight_functions()[0])
		if self.kind in BANDWIDTH:
			metadata['bw'] = 'silverman' if self.bw is None else self.bw
		if self.kind in VARIOGRAM:
			metadata['p'] = self.vs_params.p
		return metadata

	def _bound(self, values: Optional[Tuple[float, ...]], default: float):
		if values is None:
			return default
		if len(values) == 1:
			return values[0]
		return np.array(values)

	def weight_functions(self):
		return family_pair(
			self.weight_family,
			a=self._bound(self.a, -math.inf),
			b=self._bound(self.b, math.inf),
			mu=self._bound(self.mu, 0.0),
			sigma=self._bound(self.sigma, 1.0),
			multivariate=self.kind.is_multivariate,
		)

	def check_dimension(self, dim: int) -> None:
		"""
		Reject weighting or variogram parameters sized for another dimension
		than the archive's.
		"""

		kind = self.kind
		if kind.is_weighted:
			if self.weight_family is Family.INTERVAL:
				try:
					BoundsSpec(self._bound(self.a, -math.inf), self._bound(self.b, math.inf)).broadcast(dim)
				except DimensionMismatch as e:
					raise ConfigError(f"--a/--b: {e}")
			else:
				weight, _ = self.weight_functions()
				if weight.dim is not None and weight.dim != dim:
					raise ConfigError(f"--mu/--sigma have {weight.dim} values, the archive has dimension {dim}")
		if kind in VARIOGRAM:
			try:
				self.vs_params.scaling(dim)
			except ScoringError as e:
				raise ConfigError(f"--vs-weights: {e}")

	def scorer(self) -> Scorer:
		"""
		The scoring function of a single case for this configuration.
		"""

		kind = self.kind

		if kind is Kind.CRPS:
			return uniscore.crps_sample
		if kind is Kind.LOGS:
			return partial(uniscore.logs_sample, bw=self.bw)
		if kind in LIKELIHOOD:
			a = self._bound(self.a, -math.inf)
			b = self._bound(self.b, math.inf)
			return partial(uniscore.clogs_sample, a=a, b=b, bw=self.bw, cens=kind is Kind.CELS)
		if kind is Kind.ES:
			return multiscore.es_sample
		if kind is Kind.VS:
			return partial(multiscore.vs_sample, params=self.vs_params)
		if kind is Kind.MMDS:
			return multiscore.mmds_sample

		weight, chain = self.weight_functions()
		return {
			Kind.TWCRPS: partial(uniscore.twcrps_sample, chain=chain),
			Kind.OWCRPS: partial(uniscore.owcrps_sample, weight=weight),
			Kind.OWES: partial(multiscore.owes_sample, weight=weight),
			Kind.OWVS: partial(multiscore.owvs_sample, weight=weight, params=self.vs_params),
			Kind.OWMMDS: partial(multiscore.owmmds_sample, weight=weight),
			Kind.TWES: partial(multiscore.twes_sample, chain=chain),
			Kind.TWVS: partial(multiscore.twvs_sample, chain=chain, params=self.vs_params),
			Kind.TWMMDS: partial(multiscore.twmmds_sample, chain=chain),
		}[kind]


# Archives


@dataclass(frozen=True)
class Archive:
	case_ids: Tuple[str, ...]
	cases: Tuple[Case, ...]
	multivariate: bool

	def __len__(self) -> int:
		return len(self.cases)

	def with_member_weights(self, rows: np.ndarray) -> 'Archive':
		"""
		Attach member weights: one row for every case, or one row per case.
		"""

		if rows.shape[0] not in (1, len(self)):
			raise ParseError(f"Expected 1 or {len(self)} rows of member weights, got {rows.shape[0]}")

		cases: List[Case] = []
		for i, (obs, fc) in enumerate(self.cases):
			weights = rows[0] if rows.shape[0] == 1 else rows[i]
			try:
				fc = type(fc)(fc.members, weights)
			except ScoringError as e:
				raise type(e)(f"case {self.case_ids[i]}: {e}")
			cases.append((obs, fc))
		return replace(self, cases=tuple(cases))


def _float(value: str, line: int) -> float:
	try:
		return float(value)
	except ValueError:
		raise ParseError(f"line {line}: not a number: '{value}'")


def _case_error(e: ScoringError, line: int) -> ScoringError:
	return type(e)(f"line {line}: {e}")


def read_univariate(stream: TextIO) -> Archive:
	"""
	Read a CSV archive with header `y,x1,...,xm` and an optional leading
	`id` column.
	"""

	reader = csv.reader(stream)
	header = None
	for row in reader:
		if row and any(cell.strip() for cell in row):
			header = [cell.strip() for cell in row]
			break
	if header is None:
		raise EmptyArchive("The archive is empty")

	has_id = header[0] == 'id'
	columns = header[1:] if has_id else header
	if not columns or columns[0] != 'y':
		raise ParseError(f"line {reader.line_num}: header must start with 'y' (or 'id,y'), got '{','.join(header)}'")
	m = len(columns) - 1
	if m < 1:
		raise ParseError(f"line {reader.line_num}: header names no ensemble members")

	case_ids: List[str] = []
	cases: List[Case] = []
	for row in reader:
		line = reader.line_num
		if not row or not any(cell.strip() for cell in row):
			continue
		if len(row) != len(header):
			raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
		if has_id:
			case_id, row = row[0].strip(), row[1:]
		else:
			case_id = str(len(cases) + 1)
		values = [_float(cell, line) for cell in row]
		try:
			obs = Observation(values[0])
			fc = EnsembleForecast(np.array(values[1:]))
			validate_case(obs, fc)
		except ScoringError as e:
			raise _case_error(e, line)
		case_ids.append(case_id)
		cases.append((obs, fc))

	if not cases:
		raise EmptyArchive("The archive has a header but no cases")

	return Archive(tuple(case_ids), tuple(cases), multivariate=False)


def read_multivariate(stream: TextIO) -> Archive:
	"""
	Read newline-delimited JSON records `{"y": [...], "dat": [[...], ...]}`,
	`dat` holding one row of m member values per dimension.
	"""

	case_ids: List[str] = []
	cases: List[Case] = []
	dim: Optional[int] = None
	for line, text in enumerate(stream, start=1):
		if not text.strip():
			continue
		try:
			record = json.loads(text)
		except json.JSONDecodeError as e:
			raise ParseError(f"line {line}: {e.msg}")
		if not isinstance(record, dict) or 'y' not in record or 'dat' not in record:
			raise ParseError(f"line {line}: expected an object with fields 'y' and 'dat'")

		try:
			y = np.array(record['y'], dtype=np.float64)
			dat = np.array(record['dat'], dtype=np.float64)
		except (TypeError, ValueError):
			raise ParseError(f"line {line}: 'y' must be a list of numbers and 'dat' a list of equally long lists")
		if y.ndim != 1:
			raise ParseError(f"line {line}: 'y' must be a list of numbers")

		try:
			obs = Observation(y)
			fc = MultivariateEnsemble(dat)
			validate_case(obs, fc)
			if dim is not None and fc.dim != dim:
				raise DimensionMismatch(f"dimension {fc.dim} differs from the first case's dimension {dim}")
		except ScoringError as e:
			raise _case_error(e, line)
		dim = fc.dim

		case_ids.append(str(record.get('id', len(cases) + 1)))
		cases.append((obs, fc))

	if not cases:
		raise EmptyArchive("The archive is empty")

	return Archive(tuple(case_ids), tuple(cases), multivariate=True)


def read_matrix(stream: TextIO, name: str) -> np.ndarray:
	"""
	Read a headerless CSV of numbers with rows of equal length.
	"""

	reader = csv.reader(stream)
	rows = [
		[_float(cell, reader.line_num) for cell in row]
		for row in reader
		if row and any(cell.strip() for cell in row)
	]
	if not rows:
		raise ParseError(f"{name} is empty")
	if len({len(row) for row in rows}) != 1:
		raise ParseError(f"{name} has rows of different lengths")
	return np.array(rows, dtype=np.float64)


def ingest_univariate(path: Path) -> Archive:
	with open(path, newline='') as f:
		return read_univariate(f)


def ingest_multivariate(path: Path) -> Archive:
	with open(path) as f:
		return read_multivariate(f)


def ingest_matrix(path: Path, name: str) -> np.ndarray:
	with open(path, newline='') as f:
		return read_matrix(f, name)


# Running


def run_score(config: RunConfig, archive: Archive, workers: int = 1, progress: bool = False) -> ScoreTable:
	if config.kind.is_multivariate != archive.multivariate:
		expected = 'multivariate' if config.kind.is_multivariate else 'univariate'
		raise ConfigError(f"{config.kind.value} needs a {expected} archive")
	if archive.multivariate:
		config.check_dimension(archive.cases[0][1].dim)
	return score_archive(archive.cases, config.scorer(), archive.case_ids, workers=workers, progress=progress)


def render(table: ScoreTable, config: RunConfig) -> str:
	metadata = config.metadata()
	if counts := table.warning_counts:
		metadata['warnings'] = ','.join(f"{flag}:{count}" for flag, count in sorted(counts.items()))

	buffer = io.StringIO()
	if config.output_format == 'json':
		json.dump(table.to_dict(metadata), buffer, indent=2, allow_nan=False)
		buffer.write('\n')
	else:
		table.write_csv(buffer, config.digits, metadata)
	return buffer.getvalue()


def write_output(text: str, out: Optional[str], stdout) -> None:
	if out is None:
		stdout.write(text, ending='')
		return
	try:
		with open(out, 'w', newline='') as f:
			f.write(text)
	except OSError as e:
		raise CommandError(f"Cannot write {out}: {e.strerror}", returncode=EXIT_IO)


def config_error(e: ScoringError) -> CommandError:
	return CommandError(str(e), returncode=EXIT_CONFIG)


def read_input(reader, path: str, name: str = "input"):
	try:
		return reader(Path(path))
	except OSError as e:
		raise CommandError(f"Cannot read {name} {path}: {e.strerror}", returncode=EXIT_IO)
	except ScoringError as e:
		raise CommandError(f"{path}: {e}", returncode=EXIT_CONFIG)


def add_run_arguments(parser: CommandParser):
	parser._negative_number_matcher = NEGATIVE_NUMBER
	parser.add_argument('--input', required=True, help="archive to score")
	parser.add_argument('--out', default=None, help="write results here instead of stdout")
	parser.add_argument('--digits', type=int, default=None)
	parser.add_argument('--workers', type=int, default=None)
	parser.add_argument('--no-progress', action='store_true', default=False)


def run_options(options: Dict[str, Any]) -> Tuple[int, int, bool]:
	digits = options['digits']
	if digits is None:
		digits = getattr(settings, 'WSR_DIGITS', DEFAULT_DIGITS)
	workers = options['workers']
	if workers is None:
		workers = getattr(settings, 'WSR_WORKERS', 1)
	progress = getattr(settings, 'WSR_PROGRESS', None)
	if progress is None:
		progress = sys.stderr.isatty()
	if options['no_progress']:
		progress = False
	if workers < 1:
		raise CommandError(f"--workers must be positive, got {workers}", returncode=EXIT_CONFIG)
	if options['verbosity'] > 1:
		logging.getLogger('wsr').setLevel(logging.DEBUG)
	return digits, workers, progress


def _floats(values: Optional[Sequence[float]]) -> Optional[Tuple[float, ...]]:
	return None if values is None else tuple(values)


class Command(BaseCommand):
	help = "Score an archive of ensemble forecasts against their observations"

	def log_success(self, msg: str):
		self.stderr.write(self.style.SUCCESS(msg))

	def log_warning(self, msg: str):
		self.stderr.write(self.style.WARNING(msg))

	# BaseCommand

	def add_arguments(self, parser: CommandParser):
		add_run_arguments(parser)
		parser.add_argument('--kind', required=True, choices=[kind.value for kind in Kind])
		parser.add_argument('--format', default='csv', choices=['csv', 'json'])
		parser.add_argument('--weight-family', default=None, choices=[family.value for family in WEIGHT_FAMILIES])
		parser.add_argument('--a', type=float, nargs='+', default=None)
		parser.add_argument('--b', type=float, nargs='+', default=None)
		parser.add_argument('--mu', type=float, nargs='+', default=None)
		parser.add_argument('--sigma', type=float, nargs='+', default=None)
		parser.add_argument('--bw', type=float, default=None)
		parser.add_argument('--p', type=float, default=None)
		parser.add_argument('--vs-weights', default=None, help="CSV of the d×d variogram weights")
		parser.add_argument('--member-weights', default=None, help="CSV with one row, or one row per case")
		parser.add_argument('--strict', action='store_true', default=False)

	def handle(self, *args, **options):
		digits, workers, progress = run_options(options)
		kind = Kind(options['kind'])

		vs_weights = None
		if path := options['vs_weights']:
			vs_weights = read_input(lambda p: ingest_matrix(p, "variogram weights"), path, "variogram weights")

		try:
			config = RunConfig(
				kind=kind,
				weight_family=Family(options['weight_family']) if options['weight_family'] else None,
				a=_floats(options['a']),
				b=_floats(options['b']),
				mu=_floats(options['mu']),
				sigma=_floats(options['sigma']),
				bw=options['bw'],
				p=options['p'],
				vs_weights=vs_weights,
				output_format=options['format'],
				digits=digits,
				strict=options['strict'],
			).check()
			# Weight functions are validated before any data is read.
			config.scorer()
		except ScoringError as e:
			raise config_error(e)

		reader = ingest_multivariate if kind.is_multivariate else ingest_univariate
		archive = read_input(reader, options['input'])

		if path := options['member_weights']:
			rows = read_input(lambda p: ingest_matrix(p, "member weights"), path, "member weights")
			try:
				archive = archive.with_member_weights(rows)
			except ScoringError as e:
				raise config_error(e)

		try:
			table = run_score(config, archive, workers, progress)
		except ScoringError as e:
			raise config_error(e)

		write_output(render(table, config), options['out'], self.stdout)

		for flag, count in sorted(table.warning_counts.items()):
			self.log_warning(f"{count} case(s) flagged {flag}")
		counts = table.status_counts
		if table.n_undefined:
			self.log_warning(
				f"{table.n_undefined} of {table.n} scores undefined "
				f"({counts[Status.UNDEFINED_WEIGHT_MASS]} without weight mass, {counts[Status.INVALID_INPUT]} invalid)"
			)
		if config.strict and table.n_undefined:
			raise CommandError(f"{table.n_undefined} scores are not defined", returncode=EXIT_STRICT)
		self.log_success(f"Scored {table.n} cases with {kind.value}")
