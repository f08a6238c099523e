from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Tuple

import numpy as np

from ..models import CheckInDataset, common_locations
from . import features

ENTROPY_EPS = 1e-6


class BaselineModel(str, Enum):
    COMMON_P = "common_p"
    OVERLAP_P = "overlap_p"
    W_COMMON_P = "w_common_p"
    W_OVERLAP_P = "w_overlap_p"
    AA_ENT = "aa_ent"
    MIN_ENT = "min_ent"
    AA_P = "aa_p"
    MIN_P = "min_p"
    GEODIST = "geodist"
    W_GEODIST = "w_geodist"
    PP = "pp"
    DIVERSITY = "diversity"
    W_FREQUENCY = "w_frequency"
    PERSONAL = "personal"

    @property
    def requires_common(self) -> bool:
        return self in REQUIRES_COMMON


REQUIRES_COMMON = frozenset({
    BaselineModel.AA_ENT, BaselineModel.MIN_ENT, BaselineModel.AA_P, BaselineModel.MIN_P,
    BaselineModel.DIVERSITY, BaselineModel.W_FREQUENCY, BaselineModel.PERSONAL,
})


@dataclass
class BaselineContext:
    """Dataset plus memoized location/user features shared across pairs."""
    ds: CheckInDataset
    _entropy: Dict[str, float] = field(default_factory=dict, repr=False)
    _popularity: Dict[str, int] = field(default_factory=dict, repr=False)
    _homes: Dict[Tuple[str, bool], Tuple[float, float]] = field(default_factory=dict, repr=False)

    def entropy(self, location: str) -> float:
        if location not in self._entropy:
            self._entropy[location] = features.location_entropy(self.ds, location)
        return self._entropy[location]

    def popularity(self, location: str) -> int:
        if location not in self._popularity:
            self._popularity[location] = features.location_popularity(self.ds, location)
        return self._popularity[location]

    def home(self, user: str, weighted: bool) -> Tuple[float, float]:
        key = (user, weighted)
        if key not in self._homes:
            fn = features.home_location if weighted else features.mean_home_location
            self._homes[key] = fn(self.ds, user)
        return self._homes[key]

    def common(self, u: str, v: str) -> FrozenSet[str]:
        return common_locations(self.ds, u, v)


class BaseBaseline:
    """Heuristic link predictor; higher scores mean "more likely friends"."""

    model: BaselineModel
    description: str = ""

    @property
    def name(self) -> str:
        return self.model.value

    @property
    def requires_common(self) -> bool:
        return self.model.requires_common

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        raise NotImplementedError

    def score(self, ctx: BaselineContext, u: str, v: str, rng: np.random.Generator) -> float:
        ctx.ds.require_user(u)
        ctx.ds.require_user(v)
        if self.requires_common and not ctx.common(u, v):
            # random guess for pairs the model cannot rank
            return float(rng.random())
        return float(self.compute(ctx, u, v))
