import pytest

from mobilink.errors import NotFoundError, SchemaError
from mobilink.models import CheckIn, CheckInDataset, NodeId, NodeKind, SocialGraph, UserMeta, common_locations, pair_key

from tests.conftest import make_checkins

pytestmark = pytest.mark.unit


class TestCheckIn:
    """Test CheckIn record validation."""

    def test_valid_checkin(self):
        """Test creating a check-in."""
        c = CheckIn("u1", 10, 40.7, -73.9, "L1", "arts", "museum")
        assert c.user == "u1"
        assert c.location == "L1"

    @pytest.mark.parametrize("lat,lon,field", [
        (90.5, 0.0, "lat"),
        (float("nan"), 0.0, "lat"),
        (0.0, -180.5, "lon"),
        (0.0, float("inf"), "lon"),
    ])
    def test_coordinates_out_of_range(self, lat, lon, field):
        """Test that impossible coordinates name the offending field."""
        with pytest.raises(SchemaError) as exc:
            CheckIn("u1", 0, lat, lon, "L1", "arts", "museum")
        assert exc.value.field == field

    def test_boundary_coordinates(self):
        """Test that the poles and the antimeridian are accepted."""
        CheckIn("u1", 0, -90.0, 180.0, "L1", "arts", "museum")

    def test_empty_identifiers(self):
        """Test that empty user or location ids are rejected."""
        with pytest.raises(SchemaError):
            CheckIn("", 0, 0.0, 0.0, "L1", "arts", "museum")
        with pytest.raises(SchemaError):
            CheckIn("u1", 0, 0.0, 0.0, "", "arts", "museum")


class TestCheckInDataset:
    """Test the dataset indexes."""

    def test_empty_dataset(self):
        """Test the empty dataset."""
        ds = CheckInDataset()
        assert len(ds) == 0
        assert ds.users == frozenset()
        assert ds.active_users() == frozenset()

    def test_counts(self, tiny_dataset):
        """Test per-user and per-location counts."""
        assert tiny_dataset.count("a", "L1") == 3
        assert tiny_dataset.count("a", "L3") == 0
        assert tiny_dataset.total("d") == 3
        assert tiny_dataset.locations_of("b") == {"L2", "L3"}
        assert dict(tiny_dataset.visitors("L4")) == {"c": 1, "d": 2}

    def test_unknown_user(self, tiny_dataset):
        """Test lookups of a user outside U."""
        with pytest.raises(NotFoundError, match="zed"):
            tiny_dataset.total("zed")
        with pytest.raises(NotFoundError):
            tiny_dataset.locations_of("zed")

    def test_unknown_location(self, tiny_dataset):
        with pytest.raises(NotFoundError):
            tiny_dataset.visitors("L9")

    def test_first_coordinates_win(self):
        """Test that a venue keeps the coordinates of its first check-in."""
        first = CheckIn("u", 0, 1.0, 2.0, "L1", "arts", "museum")
        later = CheckIn("v", 1, 1.5, 2.5, "L1", "arts", "museum")
        ds = CheckInDataset((first, later))
        assert ds.location_coords["L1"] == (1.0, 2.0)

    def test_equality_ignores_derived_indexes(self, tiny_dataset):
        assert CheckInDataset(tiny_dataset.checkins) == tiny_dataset
        assert tiny_dataset.restrict_users({"a"}) != tiny_dataset

    def test_restrict_users(self, tiny_dataset):
        """Test restricting to a subset of users."""
        out = tiny_dataset.restrict_users({"a", "c"})
        assert out.users == {"a", "c"}
        assert len(out) == 4 + 2
        assert out.locations == {"L1", "L2", "L3", "L4"}

    def test_extra_users_without_checkins(self):
        """Test that users kept through a defense stay in U with zero totals."""
        ds = CheckInDataset(tuple(make_checkins("a", "L1", 2)), frozenset({"a", "b"}))
        assert ds.users == {"a", "b"}
        assert ds.total("b") == 0
        assert ds.locations_of("b") == frozenset()
        assert ds.extra_users == {"b"}

    def test_common_locations(self, tiny_dataset):
        assert common_locations(tiny_dataset, "a", "d") == {"L1"}
        assert common_locations(tiny_dataset, "a", "c") == frozenset()


class TestSocialGraph:
    """Test the undirected friendship graph."""

    def test_pairs_are_canonical(self):
        """Test that each friendship is stored once as (min, max)."""
        social = SocialGraph.from_pairs([("b", "a"), ("a", "b"), ("c", "a")])
        assert social.edges == {("a", "b"), ("a", "c")}
        assert social.are_friends("b", "a")
        assert ("c", "a") in social

    def test_self_loop(self):
        with pytest.raises(SchemaError):
            SocialGraph.from_pairs([("a", "a")])

    def test_restrict_counts_dropped_edges(self, tiny_social):
        """Test that restricting to a user subset counts the dropped edges as skipped."""
        out = tiny_social.restrict({"a", "b", "c"})
        assert out.edges == {("a", "b")}
        assert out.skipped == 1

    def test_sorted_edges(self):
        social = SocialGraph.from_pairs([("c", "d"), ("b", "a")])
        assert social.sorted_edges() == [("a", "b"), ("c", "d")]

    def test_pair_key(self):
        assert pair_key("z", "a") == ("a", "z")
        assert pair_key("a", "z") == ("a", "z")


class TestUserMeta:
    def test_lookup(self):
        meta = UserMeta({"a": 12})
        assert meta.get("a") == 12
        assert meta.get("b") is None
        assert len(meta) == 1


class TestNodeId:
    """Test graph node identifiers."""

    def test_namespaces_are_disjoint(self):
        """Test that a user and a location with the same id are different nodes."""
        assert NodeId.user("x") != NodeId.location("x")
        assert NodeId.user("x").is_user
        assert NodeId.location("x").kind is NodeKind.LOCATION

    def test_tokens(self):
        assert NodeId.user("u1").token == "u:u1"
        assert NodeId.parse("l:G:4071:-7400:arts") == NodeId.location("G:4071:-7400:arts")
        assert str(NodeId.location("L1")) == "l:L1"

    @pytest.mark.parametrize("token", ["u1", "x:u1", "u:", ""])
    def test_bad_tokens(self, token):
        with pytest.raises(SchemaError):
            NodeId.parse(token)

