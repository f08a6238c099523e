"""
Heuristic link-prediction baselines over check-in co-location.

Each model subclasses BaseBaseline and is registered in the baseline registry.
"""

from .base import REQUIRES_COMMON, BaseBaseline, BaselineContext, BaselineModel
from .features import haversine, home_location, location_entropy, location_popularity, mean_home_location
from .registry import BaselineRegistry, baseline_score, get_baseline_registry, score_pairs_baseline

__all__ = [
    'BaseBaseline',
    'BaselineContext',
    'BaselineModel',
    'BaselineRegistry',
    'REQUIRES_COMMON',
    'baseline_score',
    'get_baseline_registry',
    'haversine',
    'home_location',
    'location_entropy',
    'location_popularity',
    'mean_home_location',
    'score_pairs_baseline',
]
