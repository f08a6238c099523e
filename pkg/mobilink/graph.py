"""Weighted user–location bipartite graph with alias-method neighbor sampling."""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import NotFoundError, ParameterError
from .models import CheckInDataset, NodeId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AliasTable:
    """Walker's alias table: column ``i`` keeps itself with ``prob[i]``, else ``alias[i]``."""
    prob: np.ndarray
    alias: np.ndarray

    @property
    def n(self) -> int:
        return len(self.prob)

    def draw(self, u_column: float, u_coin: float) -> int:
        """Index picked by two uniforms in [0, 1)."""
        i = min(int(u_column * self.n), self.n - 1)
        return i if u_coin < self.prob[i] else int(self.alias[i])

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.random(2)
        return self.draw(u[0], u[1])

    def probabilities(self) -> np.ndarray:
        """Exact per-index mass implied by the table."""
        mass = np.array(self.prob, dtype=float)
        np.add.at(mass, self.alias, 1.0 - self.prob)
        return mass / self.n


def build_alias_table(weights: Sequence[float]) -> AliasTable:
    """Two-worklist construction in O(n); lower indices are paired first."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ParameterError("alias table needs a non-empty list of weights")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ParameterError("alias weights must be positive and finite")

    n = len(w)
    scaled = w * (n / w.sum())
    prob = np.ones(n, dtype=float)
    alias = np.arange(n, dtype=np.int64)
    small = deque(i for i in range(n) if scaled[i] < 1.0)
    large = deque(i for i in range(n) if scaled[i] >= 1.0)
    while small and large:
        s = small.popleft()
        l = large[0]
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        if scaled[l] < 1.0:
            large.popleft()
            small.append(l)
    # leftovers are 1 up to rounding
    return AliasTable(prob, alias)


@dataclass(frozen=True)
class BipartiteGraph:
    """G = (U, L, E); users occupy indices ``[0, n_users)``, locations the rest.

    Within each kind nodes are sorted by identifier, so neighbor lists
    ordered by index are ordered by identifier too.
    """
    nodes: Tuple[NodeId, ...]
    index: Dict[NodeId, int]
    n_users: int
    neighbors: Tuple[np.ndarray, ...]
    weights: Tuple[np.ndarray, ...]
    alias: Tuple[AliasTable, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_locations(self) -> int:
        return len(self.nodes) - self.n_users

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.neighbors[: self.n_users])

    def node_index(self, node: NodeId) -> int:
        try:
            return self.index[node]
        except KeyError:
            raise NotFoundError(f"node {node} is not in the graph")

    def is_user_index(self, i: int) -> bool:
        return i < self.n_users

    def users(self) -> Tuple[NodeId, ...]:
        return self.nodes[: self.n_users]

    def locations(self) -> Tuple[NodeId, ...]:
        return self.nodes[self.n_users:]

    def adjacency(self, node: NodeId) -> List[Tuple[NodeId, int]]:
        i = self.node_index(node)
        return [(self.nodes[j], int(w)) for j, w in zip(self.neighbors[i], self.weights[i])]

    def total_weight(self, node: NodeId) -> int:
        """Z in the transition probability w(x, y) / Z."""
        return int(self.weights[self.node_index(node)].sum())

    def step(self, i: int, u_column: float, u_coin: float) -> int:
        """One weighted move from node index ``i``."""
        nbrs = self.neighbors[i]
        if len(nbrs) == 0:
            raise ParameterError(f"node {self.nodes[i]} has no neighbors")
        return int(nbrs[self.alias[i].draw(u_column, u_coin)])

    def walk(self, start: int, steps: int, rng: np.random.Generator) -> List[int]:
        """``steps`` weighted moves from ``start``; returns the ``steps + 1`` visited indices."""
        path = [start]
        if steps <= 0:
            return path
        draws = rng.random((steps, 2))
        cur = start
        for s in range(steps):
            cur = self.step(cur, draws[s, 0], draws[s, 1])
            path.append(cur)
        return path


def build_graph(ds: CheckInDataset) -> BipartiteGraph:
    """One node per user and location, one edge per (u, ℓ) with weight |τ(u, ℓ)|."""
    if len(ds) == 0:
        raise ParameterError("cannot build a graph from an empty dataset")

    users = sorted(ds.active_users())
    locations = sorted(ds.locations)
    nodes = tuple([NodeId.user(u) for u in users] + [NodeId.location(l) for l in locations])
    index = {node: i for i, node in enumerate(nodes)}
    n_users = len(users)
    loc_index = {l: n_users + k for k, l in enumerate(locations)}
    user_index = {u: k for k, u in enumerate(users)}

    adj: List[List[Tuple[int, int]]] = [[] for _ in nodes]
    for (u, l), w in ds.index_user_loc.items():
        ui, li = user_index[u], loc_index[l]
        adj[ui].append((li, w))
        adj[li].append((ui, w))

    neighbors, weights, tables = [], [], []
    for lst in adj:
        lst.sort()
        nbr = np.fromiter((j for j, _ in lst), dtype=np.int64, count=len(lst))
        wts = np.fromiter((w for _, w in lst), dtype=np.int64, count=len(lst))
        neighbors.append(nbr)
        weights.append(wts)
        tables.append(build_alias_table(wts))

    g = BipartiteGraph(nodes, index, n_users, tuple(neighbors), tuple(weights), tuple(tables))
    logger.info(f"Built bipartite graph: {n_users} users, {len(locations)} locations, {g.n_edges} edges")
    return g


def sample_neighbor(g: BipartiteGraph, x: NodeId, rng: np.random.Generator) -> NodeId:
    """Neighbor y of x drawn with probability w(x, y) / Z."""
    i = g.node_index(x)
    u = rng.random(2)
    return g.nodes[g.step(i, u[0], u[1])]

