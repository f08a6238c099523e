import math
from collections import Counter

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.spatial.distance import jensenshannon

from mobilink.dataset import cell_center, grid_cell
from mobilink.defense import (
    GeoLevel, Mechanism, ObfuscationSpec, PopularityTable, SemLevel, generalize, hide, js_divergence, level_label,
    obfuscate, parse_level_label, popularity_from_dataset, recover, replace, user_distribution, utility,
)
from mobilink.errors import ParameterError, SchemaError
from mobilink.models import CheckIn, CheckInDataset

from tests.conftest import VENUES, build_dataset, make_checkins

LEVELS = [(g, s) for g in GeoLevel for s in SemLevel]


def ten_checkins():
    return build_dataset([("a", "L1", 4), ("b", "L3", 3), ("c", "L4", 3)])


def id_per_location(gen):
    return {orig: c.location for orig, c in zip(gen.provenance, gen.generalized.checkins)}


class TestHide:
    """Uniform check-in removal."""

    def test_exact_count(self):
        out = hide(ten_checkins(), 0.3, seed=0)
        assert len(out.dataset) == 7

    def test_rho_zero_is_identity(self, tiny_dataset):
        assert hide(tiny_dataset, 0.0, seed=1).dataset == tiny_dataset

    def test_rho_one_keeps_users(self, tiny_dataset):
        out = hide(tiny_dataset, 1.0, seed=1).dataset
        assert len(out) == 0
        assert out.users == tiny_dataset.users

    def test_survivors_are_a_subset(self, small_synthetic):
        ds, _ = small_synthetic
        out = hide(ds, 0.4, seed=2).dataset
        before = Counter(ds.checkins)
        assert all(before[c] >= n for c, n in Counter(out.checkins).items())
        assert len(out) == len(ds) - round(0.4 * len(ds))

    def test_deterministic(self, small_synthetic):
        ds, _ = small_synthetic
        assert hide(ds, 0.5, seed=3).dataset == hide(ds, 0.5, seed=3).dataset
        assert hide(ds, 0.5, seed=3).dataset != hide(ds, 0.5, seed=4).dataset

    def test_rho_outside_unit_interval(self, tiny_dataset):
        with pytest.raises(ParameterError):
            hide(tiny_dataset, 1.5, seed=0)


class TestReplace:
    """Random-walk venue replacement."""

    def test_rho_zero_is_identity(self, tiny_dataset):
        assert replace(tiny_dataset, 0.0, 15, seed=0).dataset == tiny_dataset

    def test_selected_count_bounds_changes(self, small_synthetic):
        ds, _ = small_synthetic
        out = replace(ds, 0.3, 15, seed=1).dataset
        moved = sum(a.location != b.location for a, b in zip(ds.checkins, out.checkins))
        assert moved <= round(0.3 * len(ds))
        assert [(c.user, c.time) for c in out] == [(c.user, c.time) for c in ds]

    @pytest.mark.parametrize("steps", [1, 3, 15])
    def test_replacements_are_existing_locations(self, small_synthetic, steps):
        """Over 10^4 replaced check-ins every walk ends on a venue of the dataset."""
        ds, _ = small_synthetic
        trials = 0
        for seed in range(9):
            out = replace(ds, 1.0, steps, seed=seed).dataset
            for c in out:
                assert c.location in ds.locations
                assert (c.lat, c.lon) == ds.location_coords[c.location]
                assert (c.category_l1, c.category_l2) == ds.location_category[c.location]
            trials += len(out)
        assert trials >= 10_000

    def test_one_step_stays_within_own_locations(self, small_synthetic):
        ds, _ = small_synthetic
        out = replace(ds, 1.0, 1, seed=3).dataset
        for c in out:
            assert c.location in ds.locations_of(c.user)

    @pytest.mark.statistical
    def test_one_step_follows_visit_weights(self, tiny_dataset):
        hits = total = 0
        for seed in range(500):
            out = replace(tiny_dataset, 1.0, 1, seed=seed).dataset
            for c in out:
                if c.user == "a":
                    total += 1
                    hits += c.location == "L1"
        assert abs(hits / total - 0.75) < 0.04

    def test_threads_do_not_change_the_result(self, small_synthetic):
        ds, _ = small_synthetic
        assert replace(ds, 0.5, 5, seed=4).dataset == replace(ds, 0.5, 5, seed=4, threads=4).dataset

    @pytest.mark.parametrize("steps", [0, 2, 14])
    def test_even_walk_steps(self, tiny_dataset, steps):
        with pytest.raises(ParameterError, match="odd"):
            replace(tiny_dataset, 0.5, steps, seed=0)

    def test_spec_rejects_even_walk_steps(self):
        with pytest.raises(ValidationError):
            ObfuscationSpec(mechanism=Mechanism.REPLACEMENT, walk_steps=4)


class TestGeneralize:
    """Joint geographic and semantic coarsening."""

    def test_nearby_same_branch_venues_merge_at_lg_hs(self, tiny_dataset):
        gen = generalize(tiny_dataset, GeoLevel.LOW, SemLevel.HIGH)
        ids = id_per_location(gen)
        assert ids["L1"] == ids["L2"]
        assert gen.containment[ids["L1"]] == {"L1", "L2"}

    def test_distinct_leaf_categories_stay_apart_at_lg_ls(self, tiny_dataset):
        ids = id_per_location(generalize(tiny_dataset, GeoLevel.LOW, SemLevel.LOW))
        assert ids["L1"] != ids["L2"]

    def test_distinct_top_categories_stay_apart(self):
        lat, lon = VENUES["L1"][:2]
        ds = CheckInDataset(tuple(make_checkins("a", "L1", 1)) + (CheckIn("a", 9, lat, lon, "L9", "food", "cafe"),))
        for geo in GeoLevel:
            ids = id_per_location(generalize(ds, geo, SemLevel.HIGH))
            assert ids["L1"] != ids["L9"]

    def test_coordinates_move_to_the_cell_center(self, tiny_dataset):
        gen = generalize(tiny_dataset, GeoLevel.HIGH, SemLevel.HIGH)
        for orig, c in zip(tiny_dataset, gen.dataset):
            assert c.location.startswith("G:")
            assert (c.lat, c.lon) == cell_center(*grid_cell(orig.lat, orig.lon, 0.1), 0.1)
        assert len(gen.dataset) == len(tiny_dataset)

    def test_partition_refinement(self, default_synthetic):
        ds, _ = default_synthetic
        finest = generalize(ds, GeoLevel.LOW, SemLevel.LOW)
        for geo, sem in LEVELS:
            coarse = id_per_location(generalize(ds, geo, sem))
            for members in finest.containment.values():
                assert len({coarse[m] for m in members}) == 1
        coarsest = generalize(ds, GeoLevel.HIGH, SemLevel.HIGH)
        assert len(coarsest.containment) < len(finest.containment)

    def test_missing_category(self):
        lat, lon = VENUES["L1"][:2]
        ds = CheckInDataset((CheckIn("a", 0, lat, lon, "L1", "arts", ""),))
        with pytest.raises(SchemaError):
            generalize(ds, GeoLevel.LOW, SemLevel.LOW)

    def test_level_labels(self):
        assert level_label(GeoLevel.LOW, SemLevel.HIGH) == "lg-hs"
        assert parse_level_label("hg-ls") == (GeoLevel.HIGH, SemLevel.LOW)
        with pytest.raises(ParameterError):
            parse_level_label("mg-ls")


class TestRecover:
    """Popularity-weighted recovery of generalized venues."""

    def test_singleton_cells_recover_exactly(self, tiny_dataset):
        gen = generalize(tiny_dataset, GeoLevel.LOW, SemLevel.LOW)
        recovered, rate = recover(gen, popularity_from_dataset(tiny_dataset), seed=0)
        assert rate == 1.0
        assert recovered == tiny_dataset

    @pytest.mark.statistical
    def test_popular_truth_is_recovered_nine_times_in_ten(self):
        ds = build_dataset([("a", "L1", 50), ("b", "L2", 1)])
        gen = generalize(ds, GeoLevel.LOW, SemLevel.HIGH)
        pop = PopularityTable({"L1": 9, "L2": 1})
        hits = draws = 0
        for s in range(400):
            recovered, _ = recover(gen, pop, seed=s)
            picks = [c.location for c in recovered if c.user == "a"]
            hits += picks.count("L1")
            draws += len(picks)
        assert abs(hits / draws - 0.9) < 0.01

    def test_zero_popularity_falls_back_to_uniform(self, tiny_dataset):
        gen = generalize(tiny_dataset, GeoLevel.LOW, SemLevel.HIGH)
        pop = PopularityTable({"L1": 0, "L2": 0})
        recovered, _ = recover(gen, pop, seed=1)
        assert recovered.locations <= tiny_dataset.locations

    def test_negative_popularity(self):
        with pytest.raises(ParameterError):
            PopularityTable({"L1": -1})

    def test_unknown_venues_count_one(self):
        assert PopularityTable({}).get("anything") == 1

    def test_needs_containment(self, tiny_dataset):
        with pytest.raises(ParameterError):
            recover(hide(tiny_dataset, 0.5, seed=0), PopularityTable({}), seed=0)

    @pytest.mark.statistical
    def test_rates_fall_as_levels_coarsen(self, default_synthetic):
        ds, _ = default_synthetic
        rates = [
            obfuscate(ds, ObfuscationSpec(mechanism=Mechanism.GENERALIZATION, geo_level=g, sem_level=s)).recovery_rate
            for g, s in [("low", "low"), ("low", "high"), ("high", "low"), ("high", "high")]
        ]
        assert rates == sorted(rates, reverse=True)
        assert len(set(rates)) == 4

    def test_obfuscate_lands_in_the_original_venue_space(self, small_synthetic):
        ds, _ = small_synthetic
        out = obfuscate(ds, ObfuscationSpec(mechanism=Mechanism.GENERALIZATION, geo_level="high", sem_level="high"))
        assert out.dataset.locations <= ds.locations
        assert 0.0 <= out.recovery_rate <= 1.0
        assert out.generalized is not None


class TestUtility:
    """Jensen-Shannon utility."""

    def test_user_distribution(self, tiny_dataset):
        assert user_distribution(tiny_dataset, "a").masses == {"L1": 0.75, "L2": 0.25}
        assert user_distribution(build_dataset([("u", "L3", 7)]), "u").masses == {"L3": 1.0}

    def test_distribution_of_emptied_user(self, tiny_dataset):
        assert user_distribution(hide(tiny_dataset, 1.0, seed=0).dataset, "a").is_empty()

    def test_js_examples(self):
        expected = 0.5 * math.log2(4 / 3) + 0.25 * math.log2(2 / 3) + 0.25
        assert js_divergence({"A": 1.0}, {"A": 0.5, "B": 0.5}) == pytest.approx(expected)
        assert js_divergence({"A": 1.0}, {"A": 0.5, "B": 0.5}) == pytest.approx(0.3113, abs=1e-4)
        assert js_divergence({"A": 1.0}, {"B": 1.0}) == pytest.approx(1.0)
        assert js_divergence({"A": 0.3, "B": 0.7}, {"A": 0.3, "B": 0.7}) == 0.0

    def test_js_empty_conventions(self):
        assert js_divergence({}, {}) == 0.0
        assert js_divergence({"A": 1.0}, {}) == 1.0

    def test_js_matches_scipy(self):
        """scipy returns the square root of the divergence."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = dict(zip("ABCD", rng.dirichlet(np.ones(4))))
            q = dict(zip("CDEF", rng.dirichlet(np.ones(4))))
            support = sorted(set(p) | set(q))
            a = [p.get(x, 0.0) for x in support]
            b = [q.get(x, 0.0) for x in support]
            assert js_divergence(p, q) == pytest.approx(jensenshannon(a, b, base=2) ** 2, abs=1e-12)

    def test_js_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = dict(zip("ABCDE", rng.dirichlet(np.ones(5))))
            q = dict(zip("CDEFG", rng.dirichlet(np.ones(5))))
            assert js_divergence(p, q) == pytest.approx(js_divergence(q, p))
            assert 0.0 <= js_divergence(p, q) <= 1.0

    def test_identical_datasets(self, tiny_dataset):
        report = utility(tiny_dataset, tiny_dataset)
        assert report.aggregate == 1.0
        assert report.phi("a") == 0.0

    def test_disjoint_supports(self, tiny_dataset):
        moved = build_dataset([("a", "L3", 4), ("b", "L4", 3), ("c", "L1", 2), ("d", "L2", 3)])
        assert utility(tiny_dataset, moved).aggregate == pytest.approx(0.0, abs=1e-12)

    def test_emptied_users_lose_everything(self, tiny_dataset):
        assert utility(tiny_dataset, hide(tiny_dataset, 1.0, seed=0).dataset).aggregate == 0.0

    def test_identity_defenses_keep_full_utility(self, tiny_dataset):
        assert utility(tiny_dataset, hide(tiny_dataset, 0.0, seed=0).dataset).aggregate == 1.0
        assert utility(tiny_dataset, replace(tiny_dataset, 0.0, 15, seed=0).dataset).aggregate == 1.0

    def test_user_set_mismatch(self, tiny_dataset):
        with pytest.raises(ParameterError):
            utility(tiny_dataset, tiny_dataset.restrict_users({"a", "b"}))

    @pytest.mark.slow
    @pytest.mark.statistical
    def test_hiding_utility_falls_with_rho(self, default_synthetic):
        ds, _ = default_synthetic
        rhos = [round(0.1 * k, 1) for k in range(1, 10)]
        means = [np.mean([utility(ds, hide(ds, r, seed=s).dataset).aggregate for s in range(5)]) for r in rhos]
        inversions = [b - a for a, b in zip(means, means[1:]) if b > a]
        assert len(inversions) <= 1
        assert all(d <= 0.01 for d in inversions)

    @pytest.mark.slow
    @pytest.mark.statistical
    def test_hiding_keeps_more_utility_than_replacement(self, default_synthetic):
        ds, _ = default_synthetic
        hid = np.mean([utility(ds, hide(ds, 0.5, seed=s).dataset).aggregate for s in range(5)])
        rep = np.mean([utility(ds, replace(ds, 0.5, 15, seed=s).dataset).aggregate for s in range(5)])
        assert hid >= rep
