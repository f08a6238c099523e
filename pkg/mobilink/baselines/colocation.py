"""Baselines counting shared locations and check-ins."""
from .base import BaseBaseline, BaselineContext, BaselineModel


class CommonPlaces(BaseBaseline):
    model = BaselineModel.COMMON_P
    description = "|ω(u) ∩ ω(v)|"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return len(ctx.common(u, v))


class OverlapPlaces(BaseBaseline):
    model = BaselineModel.OVERLAP_P
    description = "Jaccard overlap of visited locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        union = ctx.ds.locations_of(u) | ctx.ds.locations_of(v)
        if not union:
            return 0.0
        return len(ctx.common(u, v)) / len(union)


class WeightedCommonPlaces(BaseBaseline):
    model = BaselineModel.W_COMMON_P
    description = "check-ins of both users at common locations"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        ds = ctx.ds
        return sum(ds.count(u, l) + ds.count(v, l) for l in ctx.common(u, v))


class WeightedOverlapPlaces(BaseBaseline):
    model = BaselineModel.W_OVERLAP_P
    description = "w_common_p normalized by both users' check-in totals"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        total = ctx.ds.total(u) + ctx.ds.total(v)
        if total == 0:
            return 0.0
        return WeightedCommonPlaces().compute(ctx, u, v) / total


class PreferentialPlaces(BaseBaseline):
    model = BaselineModel.PP
    description = "|ω(u)| · |ω(v)|"

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return len(ctx.ds.locations_of(u)) * len(ctx.ds.locations_of(v))
