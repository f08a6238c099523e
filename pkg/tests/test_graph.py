from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy.stats import chisquare

from mobilink.errors import NotFoundError, ParameterError
from mobilink.graph import build_alias_table, build_graph, sample_neighbor
from mobilink.models import CheckInDataset, NodeId

from tests.conftest import build_dataset


# float rounding left in a table built from small integer weights
ROUNDING = Fraction(1, 2 ** 40)


def exact_mass(table):
    """Per-index mass of an alias table, summed exactly from its float entries."""
    n = table.n
    mass = [Fraction(0)] * n
    for i in range(n):
        p = Fraction(float(table.prob[i]))
        mass[i] += p / n
        mass[int(table.alias[i])] += (1 - p) / n
    return mass


class TestAliasTable:
    """Alias-method construction and sampling."""

    def test_singleton(self):
        table = build_alias_table([1])
        rng = np.random.default_rng(0)
        assert {table.sample(rng) for _ in range(50)} == {0}

    def test_uniform_pair(self):
        assert np.allclose(build_alias_table([1, 1]).probabilities(), [0.5, 0.5])

    @pytest.mark.slow
    def test_exact_mass_for_all_small_integer_tables(self):
        """Every table of size 1..8 with weights 1..4."""
        for n in range(1, 9):
            for weights in product(range(1, 5), repeat=n):
                mass = exact_mass(build_alias_table(weights))
                total = sum(weights)
                assert sum(mass) == 1, weights
                for m, w in zip(mass, weights):
                    assert abs(m - Fraction(w, total)) <= ROUNDING, weights

    def test_integer_ratios_are_exact_when_representable(self):
        assert exact_mass(build_alias_table([2, 1, 1])) == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
        assert exact_mass(build_alias_table([3, 1])) == [Fraction(3, 4), Fraction(1, 4)]

    @pytest.mark.statistical
    @pytest.mark.parametrize("weights", [(2, 1, 1), (3, 1)])
    def test_chi_square_goodness_of_fit(self, weights):
        table = build_alias_table(weights)
        rng = np.random.default_rng(42)
        u = rng.random((100_000, 2))
        draws = [table.draw(a, b) for a, b in u]
        observed = np.bincount(draws, minlength=len(weights))
        expected = np.array(weights) / sum(weights) * len(draws)
        assert chisquare(observed, expected).pvalue > 0.001

    @pytest.mark.parametrize("weights", [[], [1, 0], [1, -2], [1, float("nan")], [float("inf")]])
    def test_invalid_weights(self, weights):
        with pytest.raises(ParameterError):
            build_alias_table(weights)


class TestBuildGraph:
    """Bipartite graph construction."""

    def test_single_edge_weight(self):
        g = build_graph(build_dataset([("u1", "L1", 2)]))
        assert g.adjacency(NodeId.user("u1")) == [(NodeId.location("L1"), 2)]
        assert g.adjacency(NodeId.location("L1")) == [(NodeId.user("u1"), 2)]

    def test_two_users_two_shared_locations(self):
        g = build_graph(build_dataset([("a", "L1", 1), ("a", "L2", 1), ("b", "L1", 1), ("b", "L2", 1)]))
        assert g.n_edges == 4
        assert all(len(nbrs) == 2 for nbrs in g.neighbors)

    def test_node_count(self, default_synthetic):
        ds, _ = default_synthetic
        g = build_graph(ds)
        assert len(g) == len(ds.users) + len(ds.locations)

    def test_symmetric_and_bipartite(self, tiny_dataset):
        g = build_graph(tiny_dataset)
        for node in g.nodes:
            for other, w in g.adjacency(node):
                assert other.is_user != node.is_user
                assert (node, w) in g.adjacency(other)

    def test_total_weight_is_checkin_volume(self, tiny_dataset):
        g = build_graph(tiny_dataset)
        for u in tiny_dataset.users:
            assert g.total_weight(NodeId.user(u)) == tiny_dataset.total(u)
        assert g.total_weight(NodeId.location("L1")) == 4

    def test_adjacency_sorted_by_identifier(self, tiny_dataset):
        g = build_graph(tiny_dataset)
        for node in g.nodes:
            ids = [n.id for n, _ in g.adjacency(node)]
            assert ids == sorted(ids)

    def test_empty_dataset(self):
        with pytest.raises(ParameterError):
            build_graph(CheckInDataset())

    def test_unknown_node(self, tiny_dataset):
        with pytest.raises(NotFoundError):
            build_graph(tiny_dataset).node_index(NodeId.user("zed"))


class TestSampleNeighbor:
    """Weighted neighbor draws."""

    def test_forced_move(self):
        g = build_graph(build_dataset([("u1", "L1", 3)]))
        rng = np.random.default_rng(0)
        assert all(sample_neighbor(g, NodeId.user("u1"), rng) == NodeId.location("L1") for _ in range(20))

    @pytest.mark.statistical
    def test_frequency_follows_weights(self):
        g = build_graph(build_dataset([("u", "L1", 3), ("u", "L2", 1)]))
        rng = np.random.default_rng(7)
        hits = sum(sample_neighbor(g, NodeId.user("u"), rng) == NodeId.location("L1") for _ in range(100_000))
        assert abs(hits / 100_000 - 0.75) < 0.01

    def test_location_steps_to_a_user(self, tiny_dataset):
        g = build_graph(tiny_dataset)
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert sample_neighbor(g, NodeId.location("L3"), rng).is_user
