"""Distance between inferred home locations."""
from .base import BaseBaseline, BaselineContext, BaselineModel
from .features import haversine


class GeoDistance(BaseBaseline):
    model = BaselineModel.GEODIST
    description = "negated distance between unweighted home locations"
    weighted = False

    def compute(self, ctx: BaselineContext, u: str, v: str) -> float:
        return -haversine(ctx.home(u, self.weighted), ctx.home(v, self.weighted))


class WeightedGeoDistance(GeoDistance):
    model = BaselineModel.W_GEODIST
    description = "negated distance between check-in-weighted home locations"
    weighted = True
