"""Pairwise measures over user vectors, oriented so larger means "more likely friends"."""
import logging
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.spatial import distance

from .embedding import EmbeddingMatrix
from .errors import ParameterError
from .models import NodeId

logger = logging.getLogger(__name__)


class Measure(str, Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    CORRELATION = "correlation"
    CHEBYSHEV = "chebyshev"
    BRAYCURTIS = "braycurtis"
    CANBERRA = "canberra"
    MANHATTAN = "manhattan"

    @property
    def higher_is_similar(self) -> bool:
        return self in (Measure.COSINE, Measure.CORRELATION)


class PairLabel(str, Enum):
    FRIEND = "friend"
    STRANGER = "stranger"


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    if not a.any() or not b.any():
        return 0.0
    return 1.0 - distance.cosine(a, b)


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    return 1.0 - distance.correlation(a, b)


def _braycurtis(a: np.ndarray, b: np.ndarray) -> float:
    if np.abs(a + b).sum() == 0:
        return 0.0
    return distance.braycurtis(a, b)


def _canberra(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.abs(a) + np.abs(b)
    keep = denom > 0
    if not keep.any():
        return 0.0
    return distance.canberra(a[keep], b[keep])


_MEASURES = {
    Measure.COSINE: _cosine,
    Measure.CORRELATION: _correlation,
    Measure.EUCLIDEAN: distance.euclidean,
    Measure.CHEBYSHEV: distance.chebyshev,
    Measure.BRAYCURTIS: _braycurtis,
    Measure.CANBERRA: _canberra,
    Measure.MANHATTAN: distance.cityblock,
}


def raw_measure(a, b, m: Measure) -> float:
    """Unoriented value of ``m``; degenerate inputs map to 0 rather than NaN."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or len(a) == 0:
        raise ParameterError(f"vectors must be 1-d of equal non-zero length, got {a.shape} and {b.shape}")
    return float(_MEASURES[Measure(m)](a, b))


def orient(value: float, m: Measure) -> float:
    return value if Measure(m).higher_is_similar else -value


def score_pair(emb: EmbeddingMatrix, u: str, v: str, m: Measure = Measure.COSINE) -> float:
    a = emb.vector(NodeId.user(u))
    b = emb.vector(NodeId.user(v))
    return orient(raw_measure(a, b, m), m)


def classify_pair(score: float, threshold: float) -> PairLabel:
    return PairLabel.FRIEND if score > threshold else PairLabel.STRANGER


class PairScorer:
    """Scores user pairs against one trained embedding."""

    def __init__(self, emb: EmbeddingMatrix, measure: Measure = Measure.COSINE, threshold: Optional[float] = None):
        self.emb = emb
        self.measure = Measure(measure)
        self.threshold = threshold

    def score(self, u: str, v: str) -> float:
        return score_pair(self.emb, u, v, self.measure)

    def classify(self, u: str, v: str) -> PairLabel:
        if self.threshold is None:
            raise ParameterError("no decision threshold set on this scorer")
        return classify_pair(self.score(u, v), self.threshold)

    def rank_pairs(self, pairs: Iterable[Tuple[str, str]]) -> List[Tuple[Tuple[str, str], float]]:
        """Pairs with their scores, most similar first."""
        scored = [((u, v), self.score(u, v)) for u, v in pairs]
        scored.sort(key=lambda x: x[1], reverse=True)
        return scored


def score_pairs(emb: EmbeddingMatrix, pairs: Iterable[Tuple[str, str]], m: Measure = Measure.COSINE) -> List[float]:
    scorer = PairScorer(emb, m)
    scores = [scorer.score(u, v) for u, v in pairs]
    logger.debug(f"Scored {len(scores)} pairs with {scorer.measure.value}")
    return scores
