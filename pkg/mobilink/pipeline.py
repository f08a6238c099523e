"""Stage wiring shared by the CLI and the experiment runner."""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .baselines import score_pairs_baseline
from .config import PipelineConfig
from .dataset import (
    generate_synthetic, ingest_checkins, ingest_social_links, preprocess, read_popularity, read_user_meta,
    snap_to_grid,
)
from .defense import GeoLevel, ObfuscationSpec, PopularityTable, SemLevel
from .embedding import EmbeddingMatrix, TrainConfig, train
from .errors import ParameterError
from .graph import build_graph
from .models import CheckInDataset, SocialGraph, UserMeta
from .similarity import score_pairs
from .utils import derive_seed
from .walks import WalkCorpus, generate_walks

logger = logging.getLogger(__name__)

STAGES = ("synth", "walk", "train", "pairs", "baseline", "defense")


def stage_seeds(seed: int) -> Dict[str, int]:
    """Seed of every labelled stage derived from the master seed."""
    return {stage: derive_seed(seed, stage) for stage in STAGES}


@dataclass(frozen=True)
class PipelineInputs:
    ds: CheckInDataset
    social: SocialGraph
    meta: Optional[UserMeta] = None
    popularity: Optional[PopularityTable] = None


def load_inputs(cfg: PipelineConfig) -> PipelineInputs:
    """Read the configured CSVs, or synthesize a dataset when none is given."""
    if cfg.checkins is None:
        if cfg.social is not None:
            raise ParameterError("--social needs --checkins")
        ds, social = synthesize(cfg)
        return PipelineInputs(ds, social)
    ds = ingest_checkins(cfg.checkins)
    social = ingest_social_links(cfg.social, ds.users) if cfg.social else SocialGraph()
    meta = read_user_meta(cfg.meta) if cfg.meta else None
    pop = PopularityTable(read_popularity(cfg.popularity)) if cfg.popularity else None
    return PipelineInputs(ds, social, meta, pop)


def synthesize(cfg: PipelineConfig) -> Tuple[CheckInDataset, SocialGraph]:
    return generate_synthetic(
        n_users=cfg.synth_users,
        n_locations=cfg.synth_locations,
        n_communities=cfg.synth_communities,
        checkins_per_user=cfg.synth_checkins_per_user,
        intra_friend_prob=cfg.synth_friend_prob,
        noise_prob=cfg.synth_noise_prob,
        seed=derive_seed(cfg.seed, "synth"),
    )


def prepare_dataset(ds: CheckInDataset, meta: Optional[UserMeta], cfg: PipelineConfig) -> CheckInDataset:
    out = preprocess(
        ds, meta, cfg.min_checkins, cfg.min_distinct_locations, cfg.percentile_low, cfg.percentile_high,
    )
    if cfg.cell_deg:
        out = snap_to_grid(out, cfg.cell_deg)
    return out


def train_config(cfg: PipelineConfig) -> TrainConfig:
    return TrainConfig(
        dim=cfg.dim,
        window=cfg.window,
        negatives=cfg.negatives,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        seed=derive_seed(cfg.seed, "train"),
        mode=cfg.train_mode,
        unigram_power=cfg.unigram_power,
        threads=cfg.threads,
    )


def defense_spec(cfg: PipelineConfig) -> ObfuscationSpec:
    if cfg.mechanism is None:
        raise ParameterError("no defense mechanism configured (--mechanism)")
    return ObfuscationSpec(
        mechanism=cfg.mechanism,
        rho=cfg.rho,
        walk_steps=cfg.walk_steps,
        geo_level=GeoLevel(cfg.geo_level),
        sem_level=SemLevel(cfg.sem_level),
        seed=derive_seed(cfg.seed, "defense"),
    )


def build_walks(ds: CheckInDataset, cfg: PipelineConfig) -> WalkCorpus:
    return generate_walks(build_graph(ds), cfg.t_w, cfg.l_w, derive_seed(cfg.seed, "walk"), threads=cfg.threads)


def build_attack(ds: CheckInDataset, cfg: PipelineConfig) -> EmbeddingMatrix:
    """graph -> walks -> skip-gram vectors."""
    return train(build_walks(ds, cfg), train_config(cfg))


def score_user_pairs(ds: CheckInDataset, pairs: Sequence[Tuple[str, str]], cfg: PipelineConfig,
                     emb: Optional[EmbeddingMatrix] = None) -> List[float]:
    """Scores from the configured baseline, or from the embedding attack."""
    if cfg.model:
        return score_pairs_baseline(ds, pairs, cfg.model, derive_seed(cfg.seed, "baseline"))
    if emb is None:
        emb = build_attack(ds, cfg)
    return score_pairs(emb, pairs, cfg.measure)
