"""Experiment sweeps: each configuration runs preprocess -> (defense) -> attack or baseline -> AUC."""
import asyncio
import json
import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from ..baselines import BaselineModel
from ..config import PipelineConfig
from ..defense import obfuscate, parse_level_label, utility
from ..errors import ParameterError
from ..pipeline import PipelineInputs, defense_spec, prepare_dataset, score_user_pairs
from ..utils import derive_seed
from .metrics import auc, stratify_by_common_locations, sample_pairs

logger = logging.getLogger(__name__)

GRID_CELLS = (0.0005, 0.001, 0.01, 0.1)
MIN_CHECKIN_THRESHOLDS = (5, 10, 15, 20, 25, 30)
PARAMETER_VALUES = {
    "l_w": (10, 20, 30, 40, 50, 60, 70, 80, 90, 100),
    "t_w": (2, 4, 6, 8, 10, 12, 14, 16, 18, 20),
    "dim": (16, 32, 64, 128, 256),
}
RHOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
REPLACEMENT_WALK_STEPS = (5, 15, 25, 35)
GENERALIZATION_LEVELS = ("lg-ls", "lg-hs", "hg-ls", "hg-hs")

# Fields echoed into each report row's config_json
REPORT_FIELDS = (
    "t_w", "l_w", "dim", "window", "negatives", "learning_rate", "epochs", "measure", "model",
    "min_checkins", "min_distinct_locations", "percentile_low", "percentile_high", "cell_deg",
    "mechanism", "rho", "walk_steps", "geo_level", "sem_level",
)


class ExperimentSpec(BaseModel):
    """One configuration: the overrides applied to the base config."""
    model_config = ConfigDict(frozen=True)

    experiment: str
    params: Dict[str, Any] = Field(default_factory=dict)


class ReportRow(BaseModel):
    experiment: str
    config_json: str
    seed: int
    n_pairs: int
    auc: float
    utility: Optional[float] = None
    recovery_rate: Optional[float] = None


def _config_json(cfg: PipelineConfig, extra: Optional[Dict[str, Any]] = None) -> str:
    snapshot = cfg.public_dict()
    data = {k: snapshot[k] for k in REPORT_FIELDS}
    data.update(extra or {})
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def run_configuration(inputs: PipelineInputs, cfg: PipelineConfig, experiment: str) -> List[ReportRow]:
    """Rows for one configuration (one per common-location bucket when stratifying)."""
    ds = prepare_dataset(inputs.ds, inputs.meta, cfg)
    social = inputs.social.restrict(ds.users)

    attacked, psi, recovery = ds, None, None
    if cfg.mechanism:
        obf = obfuscate(ds, defense_spec(cfg), inputs.popularity)
        attacked = obf.dataset
        psi = utility(ds, attacked).aggregate
        recovery = obf.recovery_rate

    pairs = sample_pairs(social, attacked.active_users(), derive_seed(cfg.seed, "pairs"))
    scores = score_user_pairs(attacked, pairs.user_pairs, cfg)

    if cfg.stratify_max_k is None:
        return [ReportRow(
            experiment=experiment, config_json=_config_json(cfg), seed=cfg.seed,
            n_pairs=len(pairs), auc=auc(scores, pairs.labels), utility=psi, recovery_rate=recovery,
        )]

    by_pair = {(p.u, p.v): s for p, s in zip(pairs, scores)}
    rows = []
    for k, bucket in stratify_by_common_locations(pairs, ds, cfg.stratify_max_k).items():
        if bucket.n_positive == 0 or bucket.n_negative == 0:
            logger.warning(f"Skipping common={k}: bucket of {len(bucket)} pairs holds one label only")
            continue
        rows.append(ReportRow(
            experiment=experiment, config_json=_config_json(cfg, {"common": k}), seed=cfg.seed,
            n_pairs=len(bucket), auc=auc([by_pair[(p.u, p.v)] for p in bucket], bucket.labels),
            utility=psi, recovery_rate=recovery,
        ))
    return rows


def _configure(base: PipelineConfig, params: Dict[str, Any]) -> PipelineConfig:
    values = base.model_dump()
    values.update(params)
    # configurations run side by side, so each one trains sequentially
    values.update(deterministic=True, threads=1)
    return type(base)(**values)


async def run_experiment_async(inputs: PipelineInputs, base: PipelineConfig,
                               specs: Sequence[ExperimentSpec], threads: Optional[int] = None) -> List[ReportRow]:
    limit = asyncio.Semaphore(max(1, threads or base.threads))

    async def _run(spec: ExperimentSpec) -> List[ReportRow]:
        cfg = _configure(base, spec.params)
        async with limit:
            logger.info(f"Running {spec.experiment} {spec.params}")
            return await asyncio.to_thread(run_configuration, inputs, cfg, spec.experiment)

    results = await asyncio.gather(*(_run(s) for s in specs))
    return [row for rows in results for row in rows]


def run_experiment(inputs: PipelineInputs, base: PipelineConfig,
                   specs: Optional[Sequence[ExperimentSpec]] = None, threads: Optional[int] = None) -> List[ReportRow]:
    """Run every configuration (default: the base config alone); rows keep ``specs`` order."""
    specs = list(specs) if specs else [ExperimentSpec(experiment=base.experiment)]
    rows = asyncio.run(run_experiment_async(inputs, base, specs, threads))
    logger.info(f"Experiment finished: {len(specs)} configurations, {len(rows)} rows")
    return rows


# Sweep builders

def grid_sweep(cells: Iterable[float] = GRID_CELLS) -> List[ExperimentSpec]:
    return [ExperimentSpec(experiment="grid", params={"cell_deg": c}) for c in cells]


def min_checkins_sweep(thresholds: Iterable[int] = MIN_CHECKIN_THRESHOLDS) -> List[ExperimentSpec]:
    return [ExperimentSpec(experiment="min_checkins", params={"min_checkins": n}) for n in thresholds]


def parameter_sweep(name: str, values: Optional[Iterable[Any]] = None) -> List[ExperimentSpec]:
    if name not in PARAMETER_VALUES:
        raise ParameterError(f"parameter sweep supports {sorted(PARAMETER_VALUES)}, got '{name}'")
    return [ExperimentSpec(experiment=name, params={name: v}) for v in (values or PARAMETER_VALUES[name])]


def defense_sweep(mechanism: str, rhos: Iterable[float] = RHOS,
                  walk_steps: Iterable[int] = (15,)) -> List[ExperimentSpec]:
    if mechanism == "hiding":
        return [ExperimentSpec(experiment="hiding", params={"mechanism": "hiding", "rho": r}) for r in rhos]
    if mechanism == "replacement":
        return [
            ExperimentSpec(experiment="replacement", params={"mechanism": "replacement", "rho": r, "walk_steps": s})
            for s in walk_steps for r in rhos
        ]
    raise ParameterError(f"defense sweep covers hiding and replacement, got '{mechanism}'")


def generalization_sweep(levels: Iterable[str] = GENERALIZATION_LEVELS) -> List[ExperimentSpec]:
    specs = []
    for label in levels:
        geo, sem = parse_level_label(label)
        specs.append(ExperimentSpec(
            experiment="generalization",
            params={"mechanism": "generalization", "geo_level": geo.value, "sem_level": sem.value},
        ))
    return specs


def baseline_sweep(models: Iterable[str] = tuple(m.value for m in BaselineModel)) -> List[ExperimentSpec]:
    """The embedding attack followed by every baseline model."""
    return [ExperimentSpec(experiment="attack")] + [
        ExperimentSpec(experiment="baseline", params={"model": m}) for m in models
    ]


def build_sweep(cfg: PipelineConfig) -> List[ExperimentSpec]:
    """Configurations named by ``cfg.experiment``, taking values from the sweep lists when set."""
    name = cfg.experiment
    if name == "attack":
        return [ExperimentSpec(experiment="attack")]
    if name == "baselines":
        return baseline_sweep()
    if name == "grid":
        return grid_sweep(cfg.grid_cells or GRID_CELLS)
    if name == "min_checkins":
        return min_checkins_sweep(cfg.min_checkin_thresholds or MIN_CHECKIN_THRESHOLDS)
    if name in PARAMETER_VALUES:
        given = {"l_w": cfg.walk_lengths, "t_w": cfg.walk_times, "dim": cfg.dims}[name]
        return parameter_sweep(name, given or None)
    if name == "hiding":
        return defense_sweep("hiding", cfg.rhos or RHOS)
    if name == "replacement":
        return defense_sweep("replacement", cfg.rhos or RHOS, cfg.walk_steps_list or REPLACEMENT_WALK_STEPS)
    if name == "generalization":
        return generalization_sweep(cfg.generalization_levels or GENERALIZATION_LEVELS)
    raise ParameterError(f"unknown experiment '{name}'")
