from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Set, Tuple

from .errors import NotFoundError, SchemaError


@dataclass(frozen=True, slots=True)
class CheckIn:
    """One visit: who, when (epoch seconds), where, and the venue's two-level category."""
    user: str
    time: int
    lat: float
    lon: float
    location: str
    category_l1: str
    category_l2: str

    def __post_init__(self):
        if not self.location:
            raise SchemaError("location identifier is empty", field="location_id")
        if not self.user:
            raise SchemaError("user identifier is empty", field="user_id")
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise SchemaError(f"latitude {self.lat} outside [-90, 90]", field="lat")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise SchemaError(f"longitude {self.lon} outside [-180, 180]", field="lon")


@dataclass(frozen=True, eq=False)
class CheckInDataset:
    """Check-in corpus plus indexes derived from it.

    ``checkins`` is the only authoritative field; every index is rebuilt from
    it on construction. ``extra_users`` keeps users that lost all their
    check-ins (hiding) inside U.
    """
    checkins: Tuple[CheckIn, ...] = ()
    extra_users: FrozenSet[str] = frozenset()

    users: FrozenSet[str] = field(init=False, repr=False)
    locations: FrozenSet[str] = field(init=False, repr=False)
    index_user_loc: Mapping[Tuple[str, str], int] = field(init=False, repr=False)
    index_user: Mapping[str, int] = field(init=False, repr=False)
    index_user_locset: Mapping[str, FrozenSet[str]] = field(init=False, repr=False)
    index_location_users: Mapping[str, Mapping[str, int]] = field(init=False, repr=False)
    location_coords: Mapping[str, Tuple[float, float]] = field(init=False, repr=False)
    location_category: Mapping[str, Tuple[str, str]] = field(init=False, repr=False)

    def __post_init__(self):
        checkins = tuple(self.checkins)
        user_loc: Counter = Counter()
        per_user: Counter = Counter()
        locsets: Dict[str, Set[str]] = defaultdict(set)
        loc_users: Dict[str, Counter] = defaultdict(Counter)
        coords: Dict[str, Tuple[float, float]] = {}
        cats: Dict[str, Tuple[str, str]] = {}
        for c in checkins:
            user_loc[(c.user, c.location)] += 1
            per_user[c.user] += 1
            locsets[c.user].add(c.location)
            loc_users[c.location][c.user] += 1
            coords.setdefault(c.location, (c.lat, c.lon))
            cats.setdefault(c.location, (c.category_l1, c.category_l2))

        users = frozenset(per_user) | frozenset(self.extra_users)
        setattr_ = object.__setattr__
        setattr_(self, "checkins", checkins)
        setattr_(self, "extra_users", frozenset(self.extra_users) - frozenset(per_user))
        setattr_(self, "users", users)
        setattr_(self, "locations", frozenset(coords))
        setattr_(self, "index_user_loc", dict(user_loc))
        setattr_(self, "index_user", {u: per_user.get(u, 0) for u in users})
        setattr_(self, "index_user_locset", {u: frozenset(locsets.get(u, ())) for u in users})
        setattr_(self, "index_location_users", {l: dict(c) for l, c in loc_users.items()})
        setattr_(self, "location_coords", coords)
        setattr_(self, "location_category", cats)

    def __len__(self) -> int:
        return len(self.checkins)

    def __iter__(self) -> Iterator[CheckIn]:
        return iter(self.checkins)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CheckInDataset):
            return NotImplemented
        return self.checkins == other.checkins and self.users == other.users

    __hash__ = None  # type: ignore[assignment]

    def require_user(self, user: str) -> None:
        if user not in self.users:
            raise NotFoundError(f"unknown user '{user}'")

    def require_location(self, location: str) -> None:
        if location not in self.locations:
            raise NotFoundError(f"unknown location '{location}'")

    def count(self, user: str, location: str) -> int:
        """|τ(u, ℓ)|"""
        return self.index_user_loc.get((user, location), 0)

    def total(self, user: str) -> int:
        """|τ(u)|"""
        self.require_user(user)
        return self.index_user[user]

    def locations_of(self, user: str) -> FrozenSet[str]:
        """ω(u)"""
        self.require_user(user)
        return self.index_user_locset[user]

    def visitors(self, location: str) -> Mapping[str, int]:
        self.require_location(location)
        return self.index_location_users[location]

    def active_users(self) -> FrozenSet[str]:
        return frozenset(u for u, n in self.index_user.items() if n > 0)

    def with_checkins(self, checkins: Iterable[CheckIn], keep_users: bool = False) -> "CheckInDataset":
        """New dataset over ``checkins``; ``keep_users`` carries this U forward."""
        return CheckInDataset(tuple(checkins), self.users if keep_users else frozenset())

    def restrict_users(self, users: Iterable[str]) -> "CheckInDataset":
        keep = frozenset(users)
        return CheckInDataset(
            tuple(c for c in self.checkins if c.user in keep),
            self.extra_users & keep,
        )


def common_locations(ds: CheckInDataset, u: str, v: str) -> FrozenSet[str]:
    """ω(u) ∩ ω(v): co-visited locations regardless of time."""
    return ds.locations_of(u) & ds.locations_of(v)


def pair_key(u: str, v: str) -> Tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class SocialGraph:
    """Undirected friendships; each pair stored once as (min, max)."""
    edges: FrozenSet[Tuple[str, str]] = frozenset()
    skipped: int = 0

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]], skipped: int = 0) -> "SocialGraph":
        edges = set()
        for a, b in pairs:
            if a == b:
                raise SchemaError(f"self-loop for user '{a}'", field="user_b")
            edges.add(pair_key(a, b))
        return cls(frozenset(edges), skipped)

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, pair: Tuple[str, str]) -> bool:
        return pair_key(*pair) in self.edges

    def are_friends(self, u: str, v: str) -> bool:
        return pair_key(u, v) in self.edges

    def restrict(self, users: Iterable[str]) -> "SocialGraph":
        keep = frozenset(users)
        kept = frozenset(e for e in self.edges if e[0] in keep and e[1] in keep)
        return SocialGraph(kept, self.skipped + len(self.edges) - len(kept))

    def sorted_edges(self):
        return sorted(self.edges)


@dataclass(frozen=True)
class UserMeta:
    """Optional follower-count side table, one record per user."""
    follower_counts: Mapping[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.follower_counts)

    def get(self, user: str) -> Optional[int]:
        return self.follower_counts.get(user)


class NodeKind(str, Enum):
    USER = "user"
    LOCATION = "location"

    @property
    def prefix(self) -> str:
        return "u" if self is NodeKind.USER else "l"


@dataclass(frozen=True, order=True, slots=True)
class NodeId:
    """Graph node; users and locations live in disjoint namespaces."""
    kind: NodeKind
    id: str

    @classmethod
    def user(cls, uid: str) -> "NodeId":
        return cls(NodeKind.USER, uid)

    @classmethod
    def location(cls, lid: str) -> "NodeId":
        return cls(NodeKind.LOCATION, lid)

    @property
    def is_user(self) -> bool:
        return self.kind is NodeKind.USER

    @property
    def token(self) -> str:
        return f"{self.kind.prefix}:{self.id}"

    @classmethod
    def parse(cls, token: str) -> "NodeId":
        prefix, sep, ident = token.partition(":")
        if not sep or not ident or prefix not in ("u", "l"):
            raise SchemaError(f"bad node token '{token}'", field="token")
        return cls.user(ident) if prefix == "u" else cls.location(ident)

    def __str__(self) -> str:
        return self.token
