"""Down-sampled labeled pairs, Mann-Whitney AUC, ROC curves and common-location strata."""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ..errors import ParameterError
from ..models import CheckInDataset, SocialGraph, common_locations, pair_key
from ..utils import substream

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 1_000_000
REJECTION_FACTOR = 100


class LabeledPair(NamedTuple):
    u: str
    v: str
    label: int


@dataclass(frozen=True)
class LabeledPairSet:
    """Every friend pair (label 1) plus as many sampled stranger pairs (label 0)."""
    pairs: Tuple[LabeledPair, ...]
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[LabeledPair]:
        return iter(self.pairs)

    @property
    def labels(self) -> List[int]:
        return [p.label for p in self.pairs]

    @property
    def user_pairs(self) -> List[Tuple[str, str]]:
        return [(p.u, p.v) for p in self.pairs]

    @property
    def n_positive(self) -> int:
        return sum(p.label for p in self.pairs)

    @property
    def n_negative(self) -> int:
        return len(self.pairs) - self.n_positive

    def users(self) -> frozenset:
        return frozenset(x for p in self.pairs for x in (p.u, p.v))


def _enumerate_strangers(users: List[str], social: SocialGraph, k: int, rng: np.random.Generator) -> List[Tuple[str, str]]:
    candidates = [p for p in combinations(users, 2) if p not in social.edges]
    if len(candidates) < k:
        raise ParameterError(f"only {len(candidates)} stranger pairs available, need {k}")
    picks = np.sort(rng.choice(len(candidates), size=k, replace=False))
    return [candidates[i] for i in picks]


def _reject_strangers(users: List[str], social: SocialGraph, k: int, rng: np.random.Generator) -> List[Tuple[str, str]]:
    n = len(users)
    chosen, out = set(), []
    attempts, cap = 0, REJECTION_FACTOR * k + 1000
    while len(out) < k:
        if attempts >= cap:
            raise ParameterError(f"rejection sampling found {len(out)}/{k} stranger pairs in {cap} draws")
        attempts += 1
        i, j = rng.integers(0, n, size=2)
        if i == j:
            continue
        pair = pair_key(users[i], users[j])
        if pair in social.edges or pair in chosen:
            continue
        chosen.add(pair)
        out.append(pair)
    return out


def sample_pairs(social: SocialGraph, users: Iterable[str], seed: int) -> LabeledPairSet:
    """All friend pairs among ``users`` and an equal-size uniform sample of strangers."""
    users = sorted(set(users))
    friends = social.restrict(users).sorted_edges()
    if not friends:
        raise ParameterError("no friend pairs among the evaluated users")
    n = len(users)
    total = n * (n - 1) // 2
    if total - len(friends) < len(friends):
        raise ParameterError(f"{total - len(friends)} stranger pairs cannot balance {len(friends)} friend pairs")

    rng = substream(seed, "pairs")
    if total < ENUMERATION_LIMIT:
        strangers = _enumerate_strangers(users, social, len(friends), rng)
    else:
        strangers = _reject_strangers(users, social, len(friends), rng)

    pairs = [LabeledPair(u, v, 1) for u, v in friends] + [LabeledPair(u, v, 0) for u, v in strangers]
    logger.info(f"Sampled {len(friends)} friend and {len(strangers)} stranger pairs over {n} users")
    return LabeledPairSet(tuple(pairs), seed)


def _check_scores(scores: Sequence[float], labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ParameterError(f"{len(s)} scores for {len(y)} labels")
    if not np.isin(y, (0, 1)).all():
        raise ParameterError("labels must be 0 or 1")
    y = y.astype(np.int64)
    if y.all() or not y.any():
        raise ParameterError("AUC needs both friend and stranger labels")
    return s, y


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney U / (n_pos * n_neg); ties count one half."""
    s, y = _check_scores(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    """Point ``k`` predicts "friend" iff ``score > thresholds[k]``.

    The first point (0, 0) sits at the top score, the last (1, 1) at -inf.
    """
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self) -> float:
        """Trapezoidal area under the points."""
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2))

    def best_threshold(self) -> float:
        """Threshold maximizing TPR - FPR (first one on ties)."""
        return float(self.thresholds[int(np.argmax(self.tpr - self.fpr))])


def roc(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    s, y = _check_scores(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps = np.cumsum(y)[ends]
    fps = ends + 1 - tps
    n_pos, n_neg = tps[-1], fps[-1]
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    distinct = s[ends]
    thresholds = np.r_[distinct, -np.inf]
    return RocCurve(fpr, tpr, thresholds, auc(scores, labels))


def stratify_by_common_locations(pairs: LabeledPairSet, ds: CheckInDataset, max_k: int = 4) -> Dict[int, LabeledPairSet]:
    """Bucket pairs by |ω(u) ∩ ω(v)| for k = 0..max_k; larger overlaps are dropped.

    Buckets keep the parent's labels as they are, without rebalancing.
    """
    if max_k < 0:
        raise ParameterError(f"max_k must be >= 0, got {max_k}")
    buckets: Dict[int, List[LabeledPair]] = {k: [] for k in range(max_k + 1)}
    for p in pairs:
        k = len(common_locations(ds, p.u, p.v))
        if k <= max_k:
            buckets[k].append(p)
    return {k: LabeledPairSet(tuple(b), pairs.seed) for k, b in buckets.items()}


def common_location_histogram(pairs: LabeledPairSet, ds: CheckInDataset, max_k: int = 4,
                              label: Optional[int] = None) -> Dict[int, int]:
    """Pair counts per number of common locations; key ``max_k + 1`` gathers
    every pair with more than ``max_k``. ``label`` restricts to one class."""
    if max_k < 0:
        raise ParameterError(f"max_k must be >= 0, got {max_k}")
    hist = {k: 0 for k in range(max_k + 2)}
    for p in pairs:
        if label is not None and p.label != label:
            continue
        hist[min(len(common_locations(ds, p.u, p.v)), max_k + 1)] += 1
    return hist
