"""
Proper scoring rules for ensemble forecasts, with outcome-weighted and
threshold-weighted variants that emphasise chosen outcomes.
"""

from wsr.core import (
	BoundsSpec,
	EnsembleForecast,
	MultivariateEnsemble,
	Observation,
	ScoreValue,
	ScoringError,
	Status,
)
from wsr.diagnostics import CurveKind, Side, score_archive, summarize, threshold_curve
from wsr.multiscore import (
	VsParams,
	es_sample,
	mmds_sample,
	owes_sample,
	owmmds_sample,
	owvs_sample,
	twes_sample,
	twmmds_sample,
	twvs_sample,
	vs_sample,
)
from wsr.uniscore import clogs_sample, crps_sample, logs_sample, owcrps_sample, twcrps_sample
