"""Random-walk corpus over the bipartite graph and skip-gram context pairs."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .errors import ParameterError, SchemaError
from .exports import atomic_writer
from .graph import BipartiteGraph
from .models import NodeId
from .utils import substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkCorpus:
    """Φ: ``traces[r]`` holds node indices into ``nodes``; one row per (user, trace index)."""
    nodes: Tuple[NodeId, ...]
    traces: np.ndarray
    t_w: int
    l_w: int
    seed: Optional[int] = None

    def __len__(self) -> int:
        return self.traces.shape[0]

    def trace(self, r: int) -> List[NodeId]:
        return [self.nodes[i] for i in self.traces[r]]

    def __iter__(self) -> Iterator[List[NodeId]]:
        for r in range(len(self)):
            yield self.trace(r)


@dataclass(frozen=True, slots=True)
class ContextPair:
    center: NodeId
    context: NodeId


def _user_traces(g: BipartiteGraph, user: int, t_w: int, l_w: int, seed: int) -> np.ndarray:
    uid = g.nodes[user].id
    rows = np.empty((t_w, l_w), dtype=np.int64)
    for k in range(t_w):
        rows[k] = g.walk(user, l_w - 1, substream(seed, "walk", uid, k))
    return rows


def generate_walks(g: BipartiteGraph, t_w: int, l_w: int, seed: int, threads: int = 1) -> WalkCorpus:
    """t_w walks of l_w nodes from every user.

    Each trace draws from its own stream keyed by (seed, user id, trace
    index), so the corpus does not depend on ``threads``.
    """
    if t_w < 1:
        raise ParameterError(f"t_w must be >= 1, got {t_w}")
    if l_w < 2:
        raise ParameterError(f"l_w must be >= 2, got {l_w}")
    if g.n_users == 0:
        raise ParameterError("graph has no users to start walks from")

    users = range(g.n_users)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda u: _user_traces(g, u, t_w, l_w, seed), users))
    else:
        blocks = [_user_traces(g, u, t_w, l_w, seed) for u in users]
    traces = np.vstack(blocks)
    logger.info(f"Generated {traces.shape[0]} walks of length {l_w} (t_w={t_w}, seed={seed})")
    return WalkCorpus(g.nodes, traces, t_w, l_w, seed)


def context_index_pairs(length: int, window: int) -> Iterator[Tuple[int, int]]:
    """Positions (i, j), j != i, |i - j| <= window, clipped at trace ends."""
    for i in range(length):
        for j in range(max(0, i - window), min(length, i + window + 1)):
            if j != i:
                yield i, j


def extract_context_pairs(corpus: WalkCorpus, window: int) -> Iterator[ContextPair]:
    """Mobility-neighbor pairs in trace, then center, then context order.

    Pairs are per position, so a node revisited within the window pairs
    with its own later occurrence.
    """
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window}")
    nodes = corpus.nodes
    positions = list(context_index_pairs(corpus.l_w, window))
    for row in corpus.traces:
        for i, j in positions:
            yield ContextPair(nodes[row[i]], nodes[row[j]])


def node_frequencies(corpus: WalkCorpus) -> np.ndarray:
    """Occurrences of each node over Φ, aligned with ``corpus.nodes``."""
    return np.bincount(corpus.traces.ravel(), minlength=len(corpus.nodes))


def write_corpus(corpus: WalkCorpus, path: Path) -> Path:
    with atomic_writer(path) as f:
        for row in corpus.traces:
            f.write(" ".join(corpus.nodes[i].token for i in row))
            f.write("\n")
    return Path(path)


def read_corpus(path: Path) -> WalkCorpus:
    """Parse a corpus dump; nodes are re-indexed users first, then locations."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    lines = [ln.split() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"corpus {path.name} is empty", line=1)
    l_w = len(lines[0])
    seen = set()
    for n, tokens in enumerate(lines, start=1):
        if len(tokens) != l_w:
            raise SchemaError(f"trace has {len(tokens)} nodes, expected {l_w}", line=n)
        seen.update(tokens)
    parsed = sorted((NodeId.parse(t) for t in seen), key=lambda x: (not x.is_user, x.id))
    index = {node.token: i for i, node in enumerate(parsed)}
    traces = np.array([[index[t] for t in tokens] for tokens in lines], dtype=np.int64)
    starts = {tokens[0] for tokens in lines}
    t_w = max(1, len(lines) // max(1, len(starts)))
    return WalkCorpus(tuple(parsed), traces, t_w, l_w)
