"""
Link-prediction evaluation: labeled pair sampling, AUC/ROC and experiment sweeps.
"""

from .experiments import (
    ExperimentSpec, ReportRow, baseline_sweep, build_sweep, defense_sweep, generalization_sweep, grid_sweep,
    min_checkins_sweep, parameter_sweep, run_configuration, run_experiment,
)
from .metrics import (
    LabeledPair, LabeledPairSet, RocCurve, auc, common_location_histogram, roc, sample_pairs,
    stratify_by_common_locations,
)

__all__ = [
    'ExperimentSpec',
    'LabeledPair',
    'LabeledPairSet',
    'ReportRow',
    'RocCurve',
    'auc',
    'baseline_sweep',
    'build_sweep',
    'common_location_histogram',
    'defense_sweep',
    'generalization_sweep',
    'grid_sweep',
    'min_checkins_sweep',
    'parameter_sweep',
    'roc',
    'run_configuration',
    'run_experiment',
    'sample_pairs',
    'stratify_by_common_locations',
]
