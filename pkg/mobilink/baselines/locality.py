"""Baselines weighting common locations by how crowded or spread their visitors are."""
import math

import numpy as np
from scipy.stats import entropy

from .base import ENTROPY_EPS, BaseBaseline, BaselineContext, BaselineModel


class AdamicAdarEntropy(BaseBaseline):
    model = BaselineModel.AA_ENT
    description = "Σ 1 / (ε + H(ℓ)) over common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return sum(1.0 / (ENTROPY_EPS + ctx.entropy(l)) for l in sorted(ctx.common(u, v)))


class MinEntropy(BaseBaseline):
    model = BaselineModel.MIN_ENT
    description = "-min H(ℓ) over common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return -min(ctx.entropy(l) for l in ctx.common(u, v))


class AdamicAdarPopularity(BaseBaseline):
    model = BaselineModel.AA_P
    description = "Σ 1 / ln(1 + pop(ℓ)) over common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return sum(1.0 / math.log1p(ctx.popularity(l)) for l in sorted(ctx.common(u, v)))


class MinPopularity(BaseBaseline):
    model = BaselineModel.MIN_P
    description = "-min pop(ℓ) over common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return -min(ctx.popularity(l) for l in ctx.common(u, v))


def _shared_visits(ctx: BaselineContext, u: str, v: str):
    ds = ctx.ds
    return [(l, min(ds.count(u, l), ds.count(v, l))) for l in sorted(ctx.common(u, v))]


class Diversity(BaseBaseline):
    model = BaselineModel.DIVERSITY
    description = "entropy of min(|τ(u,ℓ)|, |τ(v,ℓ)|) over common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        m = np.array([c for _, c in _shared_visits(ctx, u, v)], dtype=float)
        return float(entropy(m))


class WeightedFrequency(BaseBaseline):
    model = BaselineModel.W_FREQUENCY
    description = "Σ min(|τ(u,ℓ)|, |τ(v,ℓ)|) / pop(ℓ)"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return sum(c / ctx.popularity(l) for l, c in _shared_visits(ctx, u, v))


class Personal(BaseBaseline):
    model = BaselineModel.PERSONAL
    description = "Σ 1 / (|τ(u,ℓ)| · |τ(v,ℓ)|)"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        ds = ctx.ds
        return sum(1.0 / (ds.count(u, l) * ds.count(v, l)) for l in sorted(ctx.common(u, v)))
