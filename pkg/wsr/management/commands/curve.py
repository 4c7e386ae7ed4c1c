import io

from typing import Iterable

from django.core.management.base import BaseCommand, CommandError, CommandParser

import wsr.management.commands.score as score

from wsr.core import ScoringError
from wsr.diagnostics import CurveKind, Side, ThresholdCurve, parse_grid, threshold_curve


def run_curve(
	kind: CurveKind,
	archive: score.Archive,
	grid: Iterable[float],
	side: Side = Side.ABOVE,
	workers: int = 1,
	progress: bool = False,
) -> ThresholdCurve:
	if archive.multivariate:
		raise score.ConfigError(f"{kind.value} curves need a univariate archive")
	return threshold_curve(archive.cases, kind, grid, side, workers=workers, progress=progress)


class Command(BaseCommand):
	help = "Mean twCRPS or owCRPS of a univariate archive as a function of the threshold"

	def log_success(self, msg: str):
		self.stderr.write(self.style.SUCCESS(msg))

	def log_warning(self, msg: str):
		self.stderr.write(self.style.WARNING(msg))

	# BaseCommand

	def add_arguments(self, parser: CommandParser):
		score.add_run_arguments(parser)
		parser.add_argument('--kind', required=True, choices=[kind.value for kind in CurveKind])
		parser.add_argument('--grid', required=True, help="thresholds as start:stop:step, stop included")
		parser.add_argument('--side', default=Side.ABOVE.value, choices=[side.value for side in Side])
		parser.add_argument('--member-weights', default=None, help="CSV with one row, or one row per case")

	def handle(self, *args, **options):
		digits, workers, progress = score.run_options(options)
		if not 1 <= digits <= 17:
			raise CommandError(f"--digits must be between 1 and 17, got {digits}", returncode=score.EXIT_CONFIG)
		kind = CurveKind(options['kind'])
		side = Side(options['side'])

		try:
			grid = parse_grid(options['grid'])
		except ScoringError as e:
			raise score.config_error(e)

		archive = score.read_input(score.ingest_univariate, options['input'])
		if path := options['member_weights']:
			rows = score.read_input(lambda p: score.ingest_matrix(p, "member weights"), path, "member weights")
			try:
				archive = archive.with_member_weights(rows)
			except ScoringError as e:
				raise score.config_error(e)

		try:
			curve = run_curve(kind, archive, grid, side, workers, progress)
		except ScoringError as e:
			raise score.config_error(e)

		buffer = io.StringIO()
		curve.write_csv(buffer, digits)
		score.write_output(buffer.getvalue(), options['out'], self.stdout)

		empty = [threshold for threshold, _, undefined in curve.rows() if undefined == len(archive)]
		if empty:
			self.log_warning(f"No defined score at {len(empty)} of {grid.size} thresholds")
		self.log_success(f"Computed {kind.value} at {grid.size} thresholds over {len(archive)} cases")
