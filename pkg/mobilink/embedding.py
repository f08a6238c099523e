"""Skip-gram with negative sampling over the walk corpus.

The trained objective is the negative-sampling log-likelihood: each
observed (center v, context n) pair is a positive example, each draw from
the unigram^power distribution a negative one, and SGD ascends
``log σ(f(n)·f(v))`` / ``log σ(-f(n)·f(v))`` one pair at a time.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from .errors import NotFoundError, ParameterError, SchemaError, TrainingError
from .exports import atomic_writer
from .graph import AliasTable, build_alias_table
from .models import NodeId
from .utils import seed_sequence
from .walks import WalkCorpus, node_frequencies

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
MAX_NEGATIVE_RETRIES = 10


class TrainMode(str, Enum):
    DETERMINISTIC = "deterministic-sequential"
    PARALLEL = "parallel-relaxed"


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default=128, ge=1)
    window: int = Field(default=10, ge=1)
    negatives: int = Field(default=5, ge=1)
    learning_rate: float = Field(default=0.025, gt=0)
    epochs: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0)
    mode: TrainMode = Field(default=TrainMode.DETERMINISTIC)
    unigram_power: float = Field(default=0.75, ge=0)
    threads: int = Field(default=1, ge=1)


@dataclass
class EmbeddingMatrix:
    """θ: input vectors f(v) and context-side output vectors per node."""
    nodes: Tuple[NodeId, ...]
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    index: Dict[NodeId, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {node: i for i, node in enumerate(self.nodes)}

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: NodeId) -> bool:
        return node in self.index

    def position(self, node: NodeId) -> int:
        try:
            return self.index[node]
        except KeyError:
            raise NotFoundError(f"no vector for {node}")

    def vector(self, node: NodeId) -> np.ndarray:
        return self.input_vectors[self.position(node)]

    @property
    def droppable(self) -> np.ndarray:
        """Location rows, kept in storage but unused for scoring."""
        return np.array([not n.is_user for n in self.nodes], dtype=bool)

    def user_vectors(self) -> Dict[str, np.ndarray]:
        return {n.id: self.input_vectors[i] for i, n in enumerate(self.nodes) if n.is_user}

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.input_vectors).all() and np.isfinite(self.output_vectors).all())


@dataclass(frozen=True)
class NegativeSampler:
    """Unigram^power sampler over the corpus vocabulary."""
    nodes: Tuple[NodeId, ...]
    counts: np.ndarray
    power: float
    table: AliasTable

    @classmethod
    def from_counts(cls, nodes: Tuple[NodeId, ...], counts: np.ndarray, power: float) -> "NegativeSampler":
        counts = np.asarray(counts, dtype=float)
        if len(nodes) != len(counts) or np.any(counts <= 0):
            raise ParameterError("negative sampler needs a positive count per node")
        return cls(tuple(nodes), counts, power, build_alias_table(counts ** power))

    def distribution(self) -> np.ndarray:
        w = self.counts ** self.power
        return w / w.sum()


def sample_negatives(sampler: NegativeSampler, context: NodeId, k: int, rng: np.random.Generator) -> List[NodeId]:
    """k draws; a draw equal to ``context`` is redrawn up to 10 times, then kept."""
    if len(sampler.nodes) < 2:
        raise ParameterError("negative sampling needs at least two nodes")
    out = []
    for _ in range(k):
        pick = sampler.nodes[sampler.table.sample(rng)]
        retries = 0
        while pick == context and retries < MAX_NEGATIVE_RETRIES:
            pick = sampler.nodes[sampler.table.sample(rng)]
            retries += 1
        out.append(pick)
    return out


def loss_terms(center: np.ndarray, context: np.ndarray, label: int) -> float:
    """log p(Δ = label | n, v) under the logistic model."""
    center = np.asarray(center, dtype=float)
    context = np.asarray(context, dtype=float)
    if center.shape != context.shape:
        raise ParameterError("center and context vectors differ in length")
    x = float(center @ context)
    if label:
        return float(np.log(max(expit(x), LOG_FLOOR)))
    return float(np.log(max(expit(-x), LOG_FLOOR)))


def objective(emb: EmbeddingMatrix, pairs: Iterable[Tuple[NodeId, NodeId, int]]) -> float:
    """Sum of ``loss_terms`` over labeled (center, context, label) pairs."""
    total = 0.0
    for center, context, label in pairs:
        total += loss_terms(emb.vector(center), emb.output_vectors[emb.position(context)], label)
    return total


# SGD kernel. Runs without the GIL so parallel-relaxed workers update the
# shared matrices concurrently with no locking.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_INV53 = 1.0 / 9007199254740992.0


@njit(nogil=True, cache=True)
def _uniform(state):
    # splitmix64; state is a 1-element uint64 array
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return (z >> _S11) * _INV53


@njit(nogil=True, cache=True)
def _update(v, n, label, lr, w_in, w_out, buf):
    dim = w_in.shape[1]
    dot = 0.0
    for d in range(dim):
        dot += w_in[v, d] * w_out[n, d]
    if not np.isfinite(dot):
        return False
    g = lr * (label - 1.0 / (1.0 + np.exp(-dot)))
    for d in range(dim):
        buf[d] = w_in[v, d]
    for d in range(dim):
        w_in[v, d] += g * w_out[n, d]
    for d in range(dim):
        w_out[n, d] += g * buf[d]
    return True


@njit(nogil=True, cache=True)
def _draw(prob, alias, state):
    n = prob.shape[0]
    i = int(_uniform(state) * n)
    if i >= n:
        i = n - 1
    if _uniform(state) < prob[i]:
        return i
    return alias[i]


@njit(nogil=True, cache=True)
def _sgd_traces(traces, window, negatives, lr, w_in, w_out, neg_prob, neg_alias, state):
    """One pass over ``traces``; returns False on a non-finite dot product."""
    buf = np.empty(w_in.shape[1])
    n_traces, length = traces.shape
    for t in range(n_traces):
        for i in range(length):
            v = traces[t, i]
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                n = traces[t, j]
                if not _update(v, n, 1.0, lr, w_in, w_out, buf):
                    return False
                for _ in range(negatives):
                    neg = _draw(neg_prob, neg_alias, state)
                    retries = 0
                    while neg == n and retries < 10:
                        neg = _draw(neg_prob, neg_alias, state)
                        retries += 1
                    if not _update(v, neg, 0.0, lr, w_in, w_out, buf):
                        return False
    return True


def gradient_step(matrix: EmbeddingMatrix, center: NodeId, context: NodeId, label: int, lr: float) -> Tuple[np.ndarray, np.ndarray]:
    """One in-place SGD update on (center, context); returns the updated vectors."""
    v, n = matrix.position(center), matrix.position(context)
    buf = np.empty(matrix.dim)
    if not _update(v, n, float(label), float(lr), matrix.input_vectors, matrix.output_vectors, buf):
        raise TrainingError(f"non-finite score for ({center}, {context})")
    return matrix.input_vectors[v].copy(), matrix.output_vectors[n].copy()


def init_matrix(nodes: Tuple[NodeId, ...], dim: int, seed: int) -> EmbeddingMatrix:
    """Input rows uniform in [-0.5/d, 0.5/d], output rows zero."""
    rng = np.random.default_rng(seed_sequence(seed, "init"))
    w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(nodes), dim))
    w_out = np.zeros((len(nodes), dim))
    return EmbeddingMatrix(tuple(nodes), w_in, w_out)


def _worker_states(seed: int, epoch: int, workers: int) -> np.ndarray:
    return seed_sequence(seed, "sgd", epoch).generate_state(workers, dtype=np.uint64)


def train(corpus: WalkCorpus, cfg: TrainConfig, resume: Optional[EmbeddingMatrix] = None,
          first_epoch: int = 0) -> EmbeddingMatrix:
    """Fit vectors for every node occurring in Φ.

    With ``resume`` the run continues from a saved model and runs epochs
    ``first_epoch .. first_epoch + cfg.epochs - 1``; in deterministic mode
    this reproduces an uninterrupted run bit for bit.
    """
    if len(corpus) == 0:
        raise ParameterError("cannot train on an empty corpus")

    counts = node_frequencies(corpus)
    present = np.flatnonzero(counts)
    vocab = tuple(corpus.nodes[i] for i in present)
    if len(vocab) < 2:
        raise ParameterError("vocabulary needs at least two nodes")
    remap = np.full(len(corpus.nodes), -1, dtype=np.int64)
    remap[present] = np.arange(len(present))
    traces = np.ascontiguousarray(remap[corpus.traces])

    sampler = NegativeSampler.from_counts(vocab, counts[present], cfg.unigram_power)
    if first_epoch < 0:
        raise ParameterError(f"first_epoch must be >= 0, got {first_epoch}")
    if resume is None:
        matrix = init_matrix(vocab, cfg.dim, cfg.seed)
    else:
        if resume.nodes != vocab or resume.dim != cfg.dim:
            raise ParameterError("saved model does not match the corpus vocabulary or dimension")
        matrix = EmbeddingMatrix(vocab, resume.input_vectors.copy(), resume.output_vectors.copy())
    w_in, w_out = matrix.input_vectors, matrix.output_vectors
    window = min(cfg.window, corpus.l_w - 1)
    workers = cfg.threads if cfg.mode is TrainMode.PARALLEL else 1

    logger.info(
        f"Training skip-gram: {len(vocab)} nodes, d={cfg.dim}, window={window}, "
        f"k={cfg.negatives}, lr={cfg.learning_rate}, epochs={cfg.epochs}, mode={cfg.mode.value}"
    )
    started = time.perf_counter()
    for epoch in range(first_epoch, first_epoch + cfg.epochs):
        states = [np.array([s], dtype=np.uint64) for s in _worker_states(cfg.seed, epoch, workers)]
        args = (window, cfg.negatives, cfg.learning_rate, w_in, w_out, sampler.table.prob, sampler.table.alias)
        if workers == 1:
            ok = _sgd_traces(traces, *args, states[0])
        else:
            chunks = np.array_split(np.arange(len(traces)), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(
                    lambda w: _sgd_traces(traces[chunks[w]], *args, states[w]), range(workers)
                ))
            ok = all(results)
        if not ok or not matrix.is_finite():
            raise TrainingError(f"non-finite update during epoch {epoch + 1}; training aborted")
        logger.debug(f"Epoch {epoch + 1} done")
    logger.info(f"Training finished in {time.perf_counter() - started:.1f}s")
    return matrix


def context_path(path: Path) -> Path:
    """Sibling file holding the output vectors: ``emb.txt`` -> ``emb.context.txt``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.context{path.suffix}")


def _write_vectors(nodes: Tuple[NodeId, ...], rows: np.ndarray, path: Path) -> None:
    with atomic_writer(path) as f:
        f.write(f"{len(nodes)} {rows.shape[1]}\n")
        for node, row in zip(nodes, rows):
            f.write(node.token + " " + " ".join(format(x, ".17g") for x in row) + "\n")


def write_embeddings(emb: EmbeddingMatrix, path: Path) -> Path:
    """``<count> <d>`` header, then ``token v1 .. vd`` with 17 significant digits.

    Input vectors go to ``path``, output vectors to ``context_path(path)`` so
    training can resume from the dump.
    """
    _write_vectors(emb.nodes, emb.input_vectors, path)
    _write_vectors(emb.nodes, emb.output_vectors, context_path(path))
    return Path(path)


def _read_vectors(path: Path) -> Tuple[Tuple[NodeId, ...], np.ndarray]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(f"embedding file {path.name} is empty", line=1)
    try:
        count, dim = (int(x) for x in lines[0].split())
    except ValueError:
        raise SchemaError("header must be '<node_count> <d>'", line=1)
    nodes, rows = [], []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != dim + 1:
            raise SchemaError(f"expected {dim} values", line=n)
        nodes.append(NodeId.parse(parts[0]))
        try:
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise SchemaError("non-numeric vector entry", line=n)
    if len(nodes) != count:
        raise SchemaError(f"header announces {count} nodes, found {len(nodes)}", line=1)
    return tuple(nodes), np.array(rows, dtype=float).reshape(count, dim)


def read_embeddings(path: Path) -> EmbeddingMatrix:
    """Load a dump; without the context file the output vectors are zero and
    the model is only fit for scoring."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    nodes, w_in = _read_vectors(path)
    ctx = context_path(path)
    if not ctx.exists():
        logger.warning(f"No output vectors at {ctx}; loaded {path.name} for scoring only")
        return EmbeddingMatrix(nodes, w_in, np.zeros_like(w_in))
    ctx_nodes, w_out = _read_vectors(ctx)
    if ctx_nodes != nodes or w_out.shape != w_in.shape:
        raise SchemaError(f"{ctx.name} does not list the same nodes and dimension as {path.name}", line=1)
    return EmbeddingMatrix(nodes, w_in, w_out)
