"""Check-in ingestion, preprocessing, geo-grid snapping and synthetic data."""
import logging
import math
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .errors import ParameterError, SchemaError
from .models import CheckIn, CheckInDataset, SocialGraph, UserMeta, pair_key

logger = logging.getLogger(__name__)

CHECKIN_COLUMNS = ["user_id", "timestamp", "lat", "lon", "location_id", "category_l1", "category_l2"]
SOCIAL_COLUMNS = ["user_a", "user_b"]
META_COLUMNS = ["user_id", "follower_count"]
POPULARITY_COLUMNS = ["location_id", "checkin_count"]

IDENTIFIER = re.compile(r"^[A-Za-z0-9_:.-]+$")
GRID_PREFIX = "g:"

# Nine top-level venue categories, four leaves each
CATEGORY_TREE: Dict[str, Tuple[str, ...]] = {
    "arts": ("museum", "gallery", "theater", "music_venue"),
    "college": ("library", "lecture_hall", "dorm", "campus_cafe"),
    "food": ("restaurant", "cafe", "bakery", "food_truck"),
    "nightlife": ("bar", "pub", "club", "lounge"),
    "outdoors": ("park", "beach", "trail", "plaza"),
    "professional": ("office", "coworking", "hospital", "school"),
    "residence": ("apartment", "house", "hotel", "hostel"),
    "shop": ("grocery", "mall", "bookstore", "pharmacy"),
    "travel": ("train_station", "airport", "bus_stop", "ferry"),
}

# Synthetic venues are scattered inside one 0.1° cell in Manhattan
_SYNTH_LAT0, _SYNTH_LON0, _SYNTH_SPAN = 40.705, -73.995, 0.09
_SYNTH_T0 = 1_500_000_000
_SYNTH_TSPAN = 365 * 86_400


# Reading

def _read_frame(path: Path, columns: List[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path.name} has no header row", line=1)
    except pd.errors.ParserError as e:
        m = re.search(r"line (\d+)", str(e))
        raise SchemaError(f"{path.name}: malformed row: {e}", line=int(m.group(1)) if m else None)
    if list(df.columns) != columns:
        raise SchemaError(
            f"{path.name} header {list(df.columns)} does not match {columns}", line=1
        )
    return df


def _identifier(value: str, line: int, field: str) -> str:
    if not isinstance(value, str):
        raise SchemaError("missing value", line=line, field=field)
    value = value.strip()
    if not IDENTIFIER.match(value):
        raise SchemaError(f"invalid identifier '{value}'", line=line, field=field)
    return value


def _number(value: str, cast, line: int, field: str):
    if not isinstance(value, str) or not value.strip():
        raise SchemaError("missing value", line=line, field=field)
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise SchemaError(f"cannot parse '{value}' as {cast.__name__}", line=line, field=field)


def ingest_checkins(path: Path) -> CheckInDataset:
    """Read a check-in CSV; row order is preserved."""
    df = _read_frame(path, CHECKIN_COLUMNS)
    checkins: List[CheckIn] = []
    parent_of: Dict[str, str] = {}
    for offset, row in enumerate(df.itertuples(index=False, name=None)):
        line = offset + 2  # header is line 1
        user, ts, lat, lon, loc, cat1, cat2 = row
        user = _identifier(user, line, "user_id")
        loc = _identifier(loc, line, "location_id")
        cat1 = _identifier(cat1, line, "category_l1")
        cat2 = _identifier(cat2, line, "category_l2")
        known = parent_of.setdefault(cat2, cat1)
        if known != cat1:
            raise SchemaError(
                f"category_l2 '{cat2}' already belongs to '{known}', not '{cat1}'",
                line=line, field="category_l1",
            )
        try:
            checkins.append(CheckIn(
                user=user,
                time=_number(ts, int, line, "timestamp"),
                lat=_number(lat, float, line, "lat"),
                lon=_number(lon, float, line, "lon"),
                location=loc,
                category_l1=cat1,
                category_l2=cat2,
            ))
        except SchemaError as e:
            if e.line is None:
                raise SchemaError(e.message, line=line, field=e.field)
            raise
    ds = CheckInDataset(tuple(checkins))
    logger.info(f"Ingested {len(ds)} check-ins ({len(ds.users)} users, {len(ds.locations)} locations) from {path}")
    return ds


def ingest_social_links(path: Path, users: Iterable[str]) -> SocialGraph:
    """Friend pairs restricted to ``users``; rows naming other users are skipped."""
    df = _read_frame(path, SOCIAL_COLUMNS)
    known = frozenset(users)
    edges: Set[Tuple[str, str]] = set()
    skipped = 0
    for offset, (a, b) in enumerate(df.itertuples(index=False, name=None)):
        line = offset + 2
        a = _identifier(a, line, "user_a")
        b = _identifier(b, line, "user_b")
        if a == b:
            raise SchemaError(f"self-loop for user '{a}'", line=line, field="user_b")
        if a not in known or b not in known:
            skipped += 1
            continue
        edges.add(pair_key(a, b))
    if skipped:
        logger.warning(f"Skipped {skipped} social links with unknown users in {path}")
    return SocialGraph(frozenset(edges), skipped)


def read_user_meta(path: Path) -> UserMeta:
    df = _read_frame(path, META_COLUMNS)
    counts: Dict[str, int] = {}
    for offset, (user, followers) in enumerate(df.itertuples(index=False, name=None)):
        line = offset + 2
        user = _identifier(user, line, "user_id")
        n = _number(followers, int, line, "follower_count")
        if n < 0:
            raise SchemaError(f"negative follower count {n}", line=line, field="follower_count")
        if user in counts:
            raise SchemaError(f"duplicate meta record for '{user}'", line=line, field="user_id")
        counts[user] = n
    return UserMeta(counts)


def read_popularity(path: Path) -> Dict[str, int]:
    df = _read_frame(path, POPULARITY_COLUMNS)
    counts: Dict[str, int] = {}
    for offset, (loc, n) in enumerate(df.itertuples(index=False, name=None)):
        line = offset + 2
        loc = _identifier(loc, line, "location_id")
        value = _number(n, int, line, "checkin_count")
        if value < 0:
            raise SchemaError(f"negative check-in count {value}", line=line, field="checkin_count")
        counts[loc] = value
    return counts


# Preprocessing

def nearest_rank(sorted_values: List[int], percentile: float) -> int:
    """Nearest-rank percentile of an ascending list."""
    n = len(sorted_values)
    rank = max(1, math.ceil(round(percentile * n / 100.0, 9)))
    return sorted_values[min(rank, n) - 1]


def follower_bounds(meta: UserMeta, percentile_low: float, percentile_high: float) -> Tuple[Optional[int], Optional[int]]:
    """(low, high) cut values over the whole side table; None means no cut."""
    values = sorted(meta.follower_counts.values())
    if not values:
        return None, None
    low = nearest_rank(values, percentile_low) if percentile_low > 0 else None
    high = nearest_rank(values, percentile_high) if percentile_high < 100 else None
    return low, high


def preprocess(
    ds: CheckInDataset,
    meta: Optional[UserMeta],
    min_checkins: int,
    min_distinct_locations: int,
    percentile_low: float,
    percentile_high: float,
) -> CheckInDataset:
    """Drop inactive, single-venue, celebrity and bot users with all their check-ins.

    Filters run in order: distinct locations, follower percentile (only with
    ``meta``), minimum check-ins.
    """
    if min_distinct_locations < 1:
        raise ParameterError("min_distinct_locations must be >= 1")
    if min_checkins < 0:
        raise ParameterError("min_checkins must be >= 0")
    if not (0 <= percentile_low < percentile_high <= 100):
        raise ParameterError("need 0 <= percentile_low < percentile_high <= 100")

    kept = {u for u in ds.users if len(ds.locations_of(u)) >= min_distinct_locations}
    logger.info(f"Distinct-location filter kept {len(kept)}/{len(ds.users)} users")

    if meta is not None:
        low, high = follower_bounds(meta, percentile_low, percentile_high)
        missing = sum(1 for u in kept if meta.get(u) is None)
        if missing:
            logger.info(f"{missing} users have no follower record and skip the percentile filter")

        def in_band(u: str) -> bool:
            n = meta.get(u)
            if n is None:
                return True
            return (low is None or n > low) and (high is None or n <= high)

        before = len(kept)
        kept = {u for u in kept if in_band(u)}
        logger.info(f"Follower percentile filter ({low}, {high}] removed {before - len(kept)} users")

    before = len(kept)
    kept = {u for u in kept if ds.total(u) >= min_checkins}
    logger.info(f"Min check-in filter (>= {min_checkins}) removed {before - len(kept)} users")
    return ds.restrict_users(kept)


# Geo grids

def grid_cell(lat: float, lon: float, cell_deg: float) -> Tuple[int, int]:
    return math.floor(lat / cell_deg), math.floor(lon / cell_deg)


def cell_center(i: int, j: int, cell_deg: float) -> Tuple[float, float]:
    lat = min(90.0, max(-90.0, (i + 0.5) * cell_deg))
    lon = min(180.0, max(-180.0, (j + 0.5) * cell_deg))
    return lat, lon


def snap_to_grid(ds: CheckInDataset, cell_deg: float) -> CheckInDataset:
    """Replace each POI by the ``g:<i>:<j>`` grid cell containing it."""
    if not cell_deg > 0:
        raise ParameterError(f"cell_deg must be > 0, got {cell_deg}")
    snapped = []
    for c in ds.checkins:
        i, j = grid_cell(c.lat, c.lon, cell_deg)
        lat, lon = cell_center(i, j, cell_deg)
        snapped.append(CheckIn(c.user, c.time, lat, lon, f"{GRID_PREFIX}{i}:{j}", c.category_l1, c.category_l2))
    out = ds.with_checkins(snapped, keep_users=True)
    logger.info(f"Snapped {len(ds.locations)} locations onto {len(out.locations)} cells of {cell_deg}°")
    return out


# Synthetic data

def generate_synthetic(
    n_users: int = 500,
    n_locations: int = 200,
    n_communities: int = 20,
    checkins_per_user: int = 40,
    intra_friend_prob: float = 0.3,
    noise_prob: float = 0.2,
    seed: int = 0,
) -> Tuple[CheckInDataset, SocialGraph]:
    """Community-structured check-ins with intra-community friendships.

    User ``i`` joins community ``i % n_communities``; community ``c`` owns
    the location block ``[c*b, (c+1)*b)`` with ``b = n_locations //
    n_communities`` (the last block takes the remainder). One PCG64
    generator seeded with ``seed`` is consumed in this order:

    1. ``n_locations x 2`` uniforms for venue coordinates;
    2. per user in index order, ``checkins_per_user`` uniforms (noise
       coin), then as many draws from ``[0, n_locations)``, then as many
       from ``[0, b_c)``, then as many timestamps;
    3. per community in order, one uniform per member pair ``(i < j)`` in
       ascending order for the friendship coin.
    """
    if n_users < 1 or n_locations < 1 or n_communities < 1 or checkins_per_user < 0:
        raise ParameterError("sizes must be positive")
    if n_communities > n_users or n_communities > n_locations:
        raise ParameterError("n_communities must not exceed n_users or n_locations")
    for name, p in (("intra_friend_prob", intra_friend_prob), ("noise_prob", noise_prob)):
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1], got {p}")

    rng = np.random.default_rng(seed)
    uw = max(4, len(str(n_users - 1)))
    lw = max(4, len(str(n_locations - 1)))
    user_ids = [f"u{i:0{uw}d}" for i in range(n_users)]
    loc_ids = [f"p{j:0{lw}d}" for j in range(n_locations)]

    l1_names = list(CATEGORY_TREE)
    coords = rng.random((n_locations, 2))
    venues = []
    for j, lid in enumerate(loc_ids):
        l1 = l1_names[j % len(l1_names)]
        leaves = CATEGORY_TREE[l1]
        venues.append((
            lid,
            round(_SYNTH_LAT0 + _SYNTH_SPAN * coords[j, 0], 6),
            round(_SYNTH_LON0 + _SYNTH_SPAN * coords[j, 1], 6),
            l1,
            leaves[(j // len(l1_names)) % len(leaves)],
        ))

    block = n_locations // n_communities
    blocks = []
    for c in range(n_communities):
        start = c * block
        stop = n_locations if c == n_communities - 1 else start + block
        blocks.append((start, stop))

    checkins: List[CheckIn] = []
    for i, uid in enumerate(user_ids):
        start, stop = blocks[i % n_communities]
        k = checkins_per_user
        noise = rng.random(k) < noise_prob
        anywhere = rng.integers(0, n_locations, k)
        home = start + rng.integers(0, stop - start, k)
        times = rng.integers(_SYNTH_T0, _SYNTH_T0 + _SYNTH_TSPAN, k)
        for n in range(k):
            lid, lat, lon, l1, l2 = venues[int(anywhere[n] if noise[n] else home[n])]
            checkins.append(CheckIn(uid, int(times[n]), lat, lon, lid, l1, l2))

    members: Dict[int, List[int]] = defaultdict(list)
    for i in range(n_users):
        members[i % n_communities].append(i)
    edges = set()
    for c in range(n_communities):
        group = members[c]
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                if rng.random() < intra_friend_prob:
                    edges.add(pair_key(user_ids[group[a]], user_ids[group[b]]))

    ds = CheckInDataset(tuple(checkins), frozenset(user_ids))
    social = SocialGraph(frozenset(edges))
    logger.info(f"Synthesized {len(ds)} check-ins for {n_users} users, {len(social)} friendships (seed={seed})")
    return ds, social


# Summaries

class DatasetSummary(BaseModel):
    n_users: int
    n_locations: int
    n_checkins: int
    n_social_links: int
    mean_checkins_per_user: float
    mean_distinct_locations: float


def describe(ds: CheckInDataset, social: Optional[SocialGraph] = None) -> DatasetSummary:
    n_users = len(ds.users)
    links = len(social.restrict(ds.users)) if social is not None else 0
    return DatasetSummary(
        n_users=n_users,
        n_locations=len(ds.locations),
        n_checkins=len(ds),
        n_social_links=links,
        mean_checkins_per_user=len(ds) / n_users if n_users else 0.0,
        mean_distinct_locations=(
            sum(len(ds.locations_of(u)) for u in ds.users) / n_users if n_users else 0.0
        ),
    )
