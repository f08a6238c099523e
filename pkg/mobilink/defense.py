"""Check-in obfuscation defenses, the popularity-aware recovery adversary and the utility metric.

Hiding deletes a share of check-ins. Replacement swaps the venue of a
share of check-ins for the end point of a short random walk from the
user. Generalization coarsens each venue to a (grid cell, category) pair;
an adversary holding per-venue popularity then samples a plausible
original venue back out of each generalized one.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import rel_entr

from .dataset import cell_center, grid_cell
from .errors import NotFoundError, ParameterError, SchemaError
from .graph import AliasTable, BipartiteGraph, build_alias_table, build_graph
from .models import CheckIn, CheckInDataset, NodeId
from .utils import round_half_up, substream

logger = logging.getLogger(__name__)

GENERALIZED_PREFIX = "G:"


class Mechanism(str, Enum):
    HIDING = "hiding"
    REPLACEMENT = "replacement"
    GENERALIZATION = "generalization"


class GeoLevel(str, Enum):
    LOW = "low"
    HIGH = "high"

    @property
    def cell_deg(self) -> float:
        return 0.01 if self is GeoLevel.LOW else 0.1


class SemLevel(str, Enum):
    LOW = "low"    # category_l2
    HIGH = "high"  # category_l1


def level_label(geo: GeoLevel, sem: SemLevel) -> str:
    """Short name such as ``lg-hs``."""
    return f"{GeoLevel(geo).value[0]}g-{SemLevel(sem).value[0]}s"


def parse_level_label(label: str) -> Tuple[GeoLevel, SemLevel]:
    levels = {"l": "low", "h": "high"}
    parts = label.strip().lower().split("-")
    if len(parts) != 2 or parts[0] not in ("lg", "hg") or parts[1] not in ("ls", "hs"):
        raise ParameterError(f"generalization level must be one of lg-ls, lg-hs, hg-ls, hg-hs, got '{label}'")
    return GeoLevel(levels[parts[0][0]]), SemLevel(levels[parts[1][0]])


class ObfuscationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    mechanism: Mechanism
    rho: float = Field(default=0.5, ge=0, le=1)
    walk_steps: int = Field(default=15, ge=1)
    geo_level: GeoLevel = GeoLevel.LOW
    sem_level: SemLevel = SemLevel.LOW
    seed: int = Field(default=0, ge=0)

    @field_validator("walk_steps")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("walk_steps needs to be odd so the walk stops at a location")
        return v

    def label(self) -> str:
        if self.mechanism is Mechanism.GENERALIZATION:
            return level_label(self.geo_level, self.sem_level)
        if self.mechanism is Mechanism.REPLACEMENT:
            return f"replacement(rho={self.rho},steps={self.walk_steps})"
        return f"hiding(rho={self.rho})"


@dataclass(frozen=True)
class PopularityTable:
    """External check-in count per venue; unknown venues count 1."""
    counts: Mapping[str, int]

    def __post_init__(self):
        for loc, n in self.counts.items():
            if n < 0:
                raise ParameterError(f"negative popularity {n} for location '{loc}'")

    def get(self, location: str) -> int:
        return self.counts.get(location, 1)


@dataclass(frozen=True)
class UserDistribution:
    user: str
    masses: Mapping[str, float]

    def __len__(self) -> int:
        return len(self.masses)

    def is_empty(self) -> bool:
        return not self.masses


Venue = Tuple[float, float, str, str]


@dataclass(frozen=True)
class ObfuscatedDataset:
    """Defended dataset plus what the metrics need.

    ``provenance[i]`` is the original venue of ``dataset.checkins[i]``; it
    is ground truth for scoring the recovery adversary and is never read by
    the mechanisms themselves. For generalization, ``generalized`` holds
    the coarse dataset, ``containment`` maps each generalized id to the
    venues inside it and ``venues`` is the public venue directory used to
    place recovered check-ins.
    """
    dataset: CheckInDataset
    spec: Optional[ObfuscationSpec]
    provenance: Tuple[str, ...]
    containment: Optional[Mapping[str, FrozenSet[str]]] = None
    venues: Optional[Mapping[str, Venue]] = None
    generalized: Optional[CheckInDataset] = None
    recovery_rate: Optional[float] = None


def _selection(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 <= rho <= 1.0:
        raise ParameterError(f"rho must lie in [0, 1], got {rho}")
    k = round_half_up(rho * n)
    return np.sort(rng.choice(n, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)


def hide(ds: CheckInDataset, rho: float, seed: int) -> ObfuscatedDataset:
    """Remove round(rho * N) check-ins drawn uniformly; emptied users stay in U."""
    drop = _selection(len(ds), rho, substream(seed, "hide"))
    mask = np.ones(len(ds), dtype=bool)
    mask[drop] = False
    kept = [c for c, keep in zip(ds.checkins, mask) if keep]
    out = ds.with_checkins(kept, keep_users=True)
    logger.info(f"Hiding removed {len(drop)}/{len(ds)} check-ins (rho={rho})")
    spec = ObfuscationSpec(mechanism=Mechanism.HIDING, rho=rho, seed=seed)
    return ObfuscatedDataset(out, spec, tuple(c.location for c in kept))


def _replacement_for(g: BipartiteGraph, c: CheckIn, index: int, walk_steps: int, seed: int) -> str:
    start = g.node_index(NodeId.user(c.user))
    end = g.nodes[g.walk(start, walk_steps, substream(seed, "replace", index))[-1]]
    if end.is_user:
        raise ParameterError(f"replacement walk for check-in {index} ended on user {end}")
    return end.id


def replace(ds: CheckInDataset, rho: float, walk_steps: int, seed: int, threads: int = 1) -> ObfuscatedDataset:
    """Swap the venue of round(rho * N) check-ins for the end of a
    ``walk_steps``-step walk from their user over the original graph."""
    if walk_steps < 1 or walk_steps % 2 == 0:
        raise ParameterError(f"walk_steps needs to be odd, got {walk_steps}")
    chosen = _selection(len(ds), rho, substream(seed, "replace-select"))
    spec = ObfuscationSpec(mechanism=Mechanism.REPLACEMENT, rho=rho, walk_steps=walk_steps, seed=seed)
    provenance = tuple(c.location for c in ds.checkins)
    if len(chosen) == 0:
        return ObfuscatedDataset(ds.with_checkins(ds.checkins, keep_users=True), spec, provenance)

    g = build_graph(ds)
    work = [(int(i), ds.checkins[i]) for i in chosen]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            targets = list(pool.map(lambda t: _replacement_for(g, t[1], t[0], walk_steps, seed), work))
    else:
        targets = [_replacement_for(g, c, i, walk_steps, seed) for i, c in work]

    checkins = list(ds.checkins)
    for (i, c), loc in zip(work, targets):
        lat, lon = ds.location_coords[loc]
        l1, l2 = ds.location_category[loc]
        checkins[i] = CheckIn(c.user, c.time, lat, lon, loc, l1, l2)
    changed = sum(1 for (_, c), loc in zip(work, targets) if loc != c.location)
    logger.info(f"Replacement rewrote {len(work)}/{len(ds)} check-ins ({changed} moved, {walk_steps} steps)")
    return ObfuscatedDataset(ds.with_checkins(checkins, keep_users=True), spec, provenance)


def generalized_id(lat: float, lon: float, l1: str, l2: str, geo: GeoLevel, sem: SemLevel) -> str:
    i, j = grid_cell(lat, lon, GeoLevel(geo).cell_deg)
    category = l2 if SemLevel(sem) is SemLevel.LOW else l1
    return f"{GENERALIZED_PREFIX}{i}:{j}:{category}"


def generalize(ds: CheckInDataset, geo_level: GeoLevel, sem_level: SemLevel) -> ObfuscatedDataset:
    """Map every venue to its (grid cell, category) bucket."""
    geo, sem = GeoLevel(geo_level), SemLevel(sem_level)
    cell = geo.cell_deg
    containment: Dict[str, set] = {}
    checkins = []
    for n, c in enumerate(ds.checkins):
        if not c.category_l1 or (sem is SemLevel.LOW and not c.category_l2):
            raise SchemaError(f"check-in {n} of '{c.user}' has no category", field="category_l1")
        gid = generalized_id(c.lat, c.lon, c.category_l1, c.category_l2, geo, sem)
        containment.setdefault(gid, set()).add(c.location)
        lat, lon = cell_center(*grid_cell(c.lat, c.lon, cell), cell)
        l2 = c.category_l2 if sem is SemLevel.LOW else c.category_l1
        checkins.append(CheckIn(c.user, c.time, lat, lon, gid, c.category_l1, l2))

    frozen = {gid: frozenset(locs) for gid, locs in containment.items()}
    venues = {l: (*ds.location_coords[l], *ds.location_category[l]) for l in ds.locations}
    out = ds.with_checkins(checkins, keep_users=True)
    logger.info(
        f"Generalization {level_label(geo, sem)} merged {len(ds.locations)} locations into {len(frozen)}"
    )
    spec = ObfuscationSpec(mechanism=Mechanism.GENERALIZATION, geo_level=geo, sem_level=sem)
    return ObfuscatedDataset(
        out, spec, tuple(c.location for c in ds.checkins),
        containment=frozen, venues=venues, generalized=out,
    )


def _cell_sampler(members: Sequence[str], pop: PopularityTable) -> Tuple[Tuple[str, ...], AliasTable]:
    weights = np.array([pop.get(l) for l in members], dtype=float)
    if weights.sum() == 0:
        return tuple(members), build_alias_table(np.ones(len(members)))
    keep = weights > 0
    return tuple(m for m, k in zip(members, keep) if k), build_alias_table(weights[keep])


def recover(gen: ObfuscatedDataset, pop: PopularityTable, seed: int) -> Tuple[CheckInDataset, float]:
    """Sample an original venue for each generalized check-in, proportional
    to popularity inside its bucket; returns the recovered dataset and the
    share of check-ins recovered exactly."""
    if gen.containment is None or gen.venues is None:
        raise ParameterError("recovery needs a generalized dataset with its containment mapping")
    coarse = gen.generalized if gen.generalized is not None else gen.dataset
    samplers: Dict[str, Tuple[Tuple[str, ...], AliasTable]] = {}
    draws = substream(seed, "recover").random((len(coarse), 2))
    recovered, hits = [], 0
    for n, c in enumerate(coarse.checkins):
        if c.location not in samplers:
            members = gen.containment.get(c.location)
            if members is None:
                raise NotFoundError(f"generalized location '{c.location}' has no containment entry")
            if not members:
                raise ParameterError(f"generalized location '{c.location}' contains no locations")
            samplers[c.location] = _cell_sampler(sorted(members), pop)
        names, table = samplers[c.location]
        loc = names[table.draw(draws[n, 0], draws[n, 1])]
        hits += loc == gen.provenance[n]
        lat, lon, l1, l2 = gen.venues[loc]
        recovered.append(CheckIn(c.user, c.time, lat, lon, loc, l1, l2))
    rate = hits / len(coarse) if len(coarse) else 1.0
    logger.info(f"Recovered {hits}/{len(coarse)} check-ins to their true location (rate={rate:.3f})")
    return coarse.with_checkins(recovered, keep_users=True), rate


def popularity_from_dataset(ds: CheckInDataset) -> PopularityTable:
    """Check-in count per venue, standing in for an external popularity source."""
    return PopularityTable({l: sum(v.values()) for l, v in ds.index_location_users.items()})


def obfuscate(ds: CheckInDataset, spec: ObfuscationSpec, pop: Optional[PopularityTable] = None,
              threads: int = 1) -> ObfuscatedDataset:
    """Apply ``spec``; generalization is followed by recovery so the result
    lives in the original venue space."""
    if spec.mechanism is Mechanism.HIDING:
        return hide(ds, spec.rho, spec.seed)
    if spec.mechanism is Mechanism.REPLACEMENT:
        return replace(ds, spec.rho, spec.walk_steps, spec.seed, threads=threads)
    gen = generalize(ds, spec.geo_level, spec.sem_level)
    recovered, rate = recover(gen, pop or popularity_from_dataset(ds), spec.seed)
    return ObfuscatedDataset(
        recovered, spec, gen.provenance, gen.containment, gen.venues, gen.generalized, rate,
    )


# Utility

def user_distribution(ds: CheckInDataset, user: str) -> UserDistribution:
    """P(A = ℓ) = |τ(u, ℓ)| / |τ(u)|; empty when u has no check-ins."""
    total = ds.total(user)
    if total == 0:
        return UserDistribution(user, {})
    return UserDistribution(user, {l: ds.count(user, l) / total for l in sorted(ds.locations_of(user))})


def js_divergence(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Jensen-Shannon divergence in bits over the union support, clamped to [0, 1]."""
    if not p and not q:
        return 0.0
    if not p or not q:
        return 1.0
    support = sorted(set(p) | set(q))
    a = np.array([p.get(x, 0.0) for x in support])
    b = np.array([q.get(x, 0.0) for x in support])
    m = (a + b) / 2
    phi = (rel_entr(a, m).sum() + rel_entr(b, m).sum()) / (2 * math.log(2))
    return float(min(1.0, max(0.0, phi)))


class UtilityReport(NamedTuple):
    per_user: Dict[str, float]
    aggregate: float

    def phi(self, user: str) -> float:
        return 1.0 - self.per_user[user]


def utility(original: CheckInDataset, obfuscated: CheckInDataset) -> UtilityReport:
    """ψ(u) = 1 - JS(P_o(u), P_b(u)) per user and their mean Ψ."""
    if original.users != obfuscated.users:
        missing = sorted(original.users ^ obfuscated.users)[:5]
        raise ParameterError(f"datasets cover different users (e.g. {missing})")
    if not original.users:
        raise ParameterError("utility needs at least one user")
    per_user = {}
    for u in sorted(original.users):
        phi = js_divergence(user_distribution(original, u).masses, user_distribution(obfuscated, u).masses)
        per_user[u] = 1.0 - phi
    aggregate = float(np.mean(list(per_user.values())))
    logger.info(f"Utility over {len(per_user)} users: {aggregate:.4f}")
    return UtilityReport(per_user, aggregate)
