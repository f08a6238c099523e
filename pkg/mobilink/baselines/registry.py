import logging
from typing import Dict, Iterable, List, Optional, Tuple, Type

import numpy as np

from ..errors import NotFoundError, ParameterError
from ..models import CheckInDataset, pair_key
from ..utils import substream
from .base import BaseBaseline, BaselineContext, BaselineModel

logger = logging.getLogger(__name__)


class BaselineRegistry:
    """Registry for the heuristic baseline models"""

    def __init__(self):
        self._baselines: Dict[BaselineModel, Type[BaseBaseline]] = {}
        self._initialize_baselines()

    def _initialize_baselines(self):
        from .colocation import (
            CommonPlaces, OverlapPlaces, PreferentialPlaces, WeightedCommonPlaces, WeightedOverlapPlaces,
        )
        from .geographic import GeoDistance, WeightedGeoDistance
        from .locality import (
            AdamicAdarEntropy, AdamicAdarPopularity, Diversity, MinEntropy, MinPopularity, Personal,
            WeightedFrequency,
        )

        for cls in (
            CommonPlaces, OverlapPlaces, WeightedCommonPlaces, WeightedOverlapPlaces,
            AdamicAdarEntropy, MinEntropy, AdamicAdarPopularity, MinPopularity,
            GeoDistance, WeightedGeoDistance, PreferentialPlaces,
            Diversity, WeightedFrequency, Personal,
        ):
            self.register(cls)

    def register(self, baseline_class: Type[BaseBaseline]):
        self._baselines[baseline_class.model] = baseline_class

    def get_baseline(self, model) -> BaseBaseline:
        try:
            key = BaselineModel(model)
        except ValueError:
            raise NotFoundError(f"unknown baseline model '{model}'")
        if key not in self._baselines:
            raise NotFoundError(f"baseline model '{key.value}' is not registered")
        return self._baselines[key]()

    def list_baselines(self) -> List[Dict[str, object]]:
        return [
            {"name": m.value, "description": cls.description, "requires_common": m.requires_common}
            for m, cls in self._baselines.items()
        ]


_registry: Optional[BaselineRegistry] = None


def get_baseline_registry() -> BaselineRegistry:
    """Get the global baseline registry"""
    global _registry
    if _registry is None:
        _registry = BaselineRegistry()
    return _registry


def baseline_score(ds: CheckInDataset, u: str, v: str, model, rng: np.random.Generator,
                   ctx: Optional[BaselineContext] = None) -> float:
    """Score one pair; pairs without common locations fall back to ``rng.random()``
    for the models that need them."""
    if u == v:
        raise ParameterError("baseline pairs need two distinct users")
    ctx = ctx or BaselineContext(ds)
    return get_baseline_registry().get_baseline(model).score(ctx, u, v, rng)


def score_pairs_baseline(ds: CheckInDataset, pairs: Iterable[Tuple[str, str]], model, seed: int) -> List[float]:
    """Baseline scores for many pairs; each pair's fallback draw uses its own
    stream keyed by the sorted pair, so order does not matter."""
    baseline = get_baseline_registry().get_baseline(model)
    ctx = BaselineContext(ds)
    scores = []
    for u, v in pairs:
        if u == v:
            raise ParameterError("baseline pairs need two distinct users")
        a, b = pair_key(u, v)
        scores.append(baseline.score(ctx, u, v, substream(seed, "baseline", baseline.name, a, b)))
    logger.debug(f"Scored {len(scores)} pairs with baseline {baseline.name}")
    return scores
