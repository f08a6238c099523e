import argparse
import json
import logging
import sys
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .config import PipelineConfig, build_config
from .dataset import describe, ingest_checkins
from .defense import obfuscate, utility
from .embedding import context_path, read_embeddings, train, write_embeddings
from .errors import MobilinkError, ParameterError
from .evaluation import build_sweep, roc, run_experiment, sample_pairs
from .exports import (
    write_checkins, write_containment, write_json, write_report, write_roc, write_scores, write_social,
    write_utility, read_scores,
)
from .models import CheckInDataset
from .pipeline import (
    build_walks, defense_spec, load_inputs, prepare_dataset, score_user_pairs, stage_seeds, synthesize,
    train_config,
)
from .utils import derive_seed
from .walks import read_corpus, write_corpus

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _config_arguments() -> argparse.ArgumentParser:
    """One ``--field-name`` flag per PipelineConfig field; unset flags stay absent."""
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument("--config", type=Path, help="flat JSON config file")
    for name, field in PipelineConfig.model_fields.items():
        ann = field.annotation
        args = [a for a in typing.get_args(ann) if a is not type(None)]
        if typing.get_origin(ann) is typing.Union and len(args) == 1:
            ann = args[0]
        kw: Dict[str, Any] = {"dest": name, "help": field.description}
        if ann is bool:
            kw["action"] = argparse.BooleanOptionalAction
        elif typing.get_origin(ann) in (list, List):
            kw["nargs"] = "+"
            kw["type"] = typing.get_args(ann)[0]
        elif isinstance(ann, type) and issubclass(ann, Enum):
            kw["choices"] = [m.value for m in ann]
        elif ann in (int, float, Path):
            kw["type"] = ann
        parent.add_argument(_flag(name), **kw)
    return parent


def _out(cfg: PipelineConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def _write_metadata(cfg: PipelineConfig, command: str, outputs: List[Path]) -> None:
    write_json({
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "stage_seeds": stage_seeds(cfg.seed),
        "config": cfg.public_dict(),
        "outputs": sorted(str(p) for p in outputs),
    }, _out(cfg, "run_metadata.json"))


def _prepared(cfg: PipelineConfig):
    inputs = load_inputs(cfg)
    return inputs, prepare_dataset(inputs.ds, inputs.meta, cfg)


def cmd_ingest(cfg: PipelineConfig) -> List[Path]:
    if cfg.checkins is None:
        raise ParameterError("ingest needs --checkins")
    inputs = load_inputs(cfg)
    outputs = [write_checkins(inputs.ds, _out(cfg, "checkins.csv"))]
    if cfg.social:
        outputs.append(write_social(inputs.social, _out(cfg, "social.csv")))
    print(f"Ingested {len(inputs.ds)} check-ins, {len(inputs.ds.users)} users, "
          f"{len(inputs.social)} social links ({inputs.social.skipped} skipped).")
    return outputs


def cmd_describe(cfg: PipelineConfig) -> List[Path]:
    inputs = load_inputs(cfg)
    print(describe(inputs.ds, inputs.social).model_dump_json(indent=2))
    return []


def cmd_preprocess(cfg: PipelineConfig) -> List[Path]:
    inputs, ds = _prepared(cfg)
    social = inputs.social.restrict(ds.users)
    outputs = [
        write_checkins(ds, _out(cfg, "checkins_preprocessed.csv")),
        write_social(social, _out(cfg, "social_preprocessed.csv")),
    ]
    print(f"Kept {len(ds.users)}/{len(inputs.ds.users)} users and {len(ds)} check-ins.")
    return outputs


def cmd_synth(cfg: PipelineConfig) -> List[Path]:
    ds, social = synthesize(cfg)
    outputs = [write_checkins(ds, _out(cfg, "checkins.csv")), write_social(social, _out(cfg, "social.csv"))]
    print(f"Synthesized {len(ds)} check-ins for {len(ds.users)} users with {len(social)} friendships.")
    return outputs


def cmd_walk(cfg: PipelineConfig) -> List[Path]:
    _, ds = _prepared(cfg)
    corpus = build_walks(ds, cfg)
    path = write_corpus(corpus, _out(cfg, "corpus.txt"))
    print(f"Wrote {len(corpus)} walks to {path}")
    return [path]


def cmd_train(cfg: PipelineConfig) -> List[Path]:
    if cfg.corpus:
        corpus = read_corpus(cfg.corpus)
    else:
        _, ds = _prepared(cfg)
        corpus = build_walks(ds, cfg)
    resume = read_embeddings(cfg.embeddings) if cfg.embeddings else None
    emb = train(corpus, train_config(cfg), resume=resume, first_epoch=cfg.first_epoch)
    path = write_embeddings(emb, _out(cfg, "embeddings.txt"))
    print(f"Wrote {len(emb)} vectors of dimension {emb.dim} to {path}")
    return [path, context_path(path)]


def cmd_score(cfg: PipelineConfig) -> List[Path]:
    inputs, ds = _prepared(cfg)
    pairs = sample_pairs(inputs.social.restrict(ds.users), ds.active_users(), derive_seed(cfg.seed, "pairs"))
    emb = read_embeddings(cfg.embeddings) if cfg.embeddings and not cfg.model else None
    scores = score_user_pairs(ds, pairs.user_pairs, cfg, emb)
    path = write_scores(_out(cfg, "scores.csv"), pairs.user_pairs, scores, pairs.labels, cfg.model)
    print(f"Scored {len(pairs)} pairs with {cfg.model or cfg.measure.value}: {path}")
    return [path]


def cmd_evaluate(cfg: PipelineConfig) -> List[Path]:
    if cfg.scores is None:
        raise ParameterError("evaluate needs --scores")
    pairs, labels, scores = read_scores(cfg.scores)
    kept = [(s, y) for s, y in zip(scores, labels) if y is not None]
    if len(kept) < len(scores):
        logger.warning(f"Ignoring {len(scores) - len(kept)} unlabeled rows")
    curve = roc([s for s, _ in kept], [y for _, y in kept])
    path = write_roc(curve, _out(cfg, "roc.csv"))
    print(f"auc={curve.auc}")
    print(f"best_threshold={curve.best_threshold()}")
    return [path]


def _pad_users(obfuscated: CheckInDataset, original: CheckInDataset) -> CheckInDataset:
    """Users emptied by a defense vanish from CSV; put them back into U."""
    extra = obfuscated.users - original.users
    if extra:
        raise ParameterError(f"obfuscated dataset has users missing from the original: {sorted(extra)[:5]}")
    return CheckInDataset(obfuscated.checkins, original.users)


def cmd_defend(cfg: PipelineConfig) -> List[Path]:
    inputs, ds = _prepared(cfg)
    obf = obfuscate(ds, defense_spec(cfg), inputs.popularity, threads=cfg.threads)
    outputs = [write_checkins(obf.dataset, _out(cfg, "obfuscated_checkins.csv"))]
    if obf.containment is not None:
        outputs.append(write_checkins(obf.generalized, _out(cfg, "generalized_checkins.csv")))
        outputs.append(write_containment(obf.containment, _out(cfg, "containment.csv")))
        print(f"recovery_rate={obf.recovery_rate}")
    print(f"Wrote {len(obf.dataset)} obfuscated check-ins ({obf.spec.label()}) to {outputs[0]}")
    return outputs


def cmd_utility(cfg: PipelineConfig) -> List[Path]:
    inputs, ds = _prepared(cfg)
    if cfg.obfuscated:
        obfuscated = _pad_users(ingest_checkins(cfg.obfuscated), ds)
    else:
        obfuscated = obfuscate(ds, defense_spec(cfg), inputs.popularity, threads=cfg.threads).dataset
    report = utility(ds, obfuscated)
    path = write_utility(report, _out(cfg, "utility.csv"))
    print(f"utility={report.aggregate}")
    return [path]


def cmd_sweep(cfg: PipelineConfig) -> List[Path]:
    inputs = load_inputs(cfg)
    rows = run_experiment(inputs, cfg, build_sweep(cfg))
    path = write_report([r.model_dump() for r in rows], _out(cfg, "report.csv"))
    for r in rows:
        print(f"{r.experiment} {r.config_json} auc={r.auc:.4f}")
    print(f"Report: {path}")
    return [path]


COMMANDS = {
    "ingest": (cmd_ingest, "Validate check-in and social CSVs"),
    "describe": (cmd_describe, "Summarize a dataset"),
    "preprocess": (cmd_preprocess, "Filter users and optionally snap to a grid"),
    "synth": (cmd_synth, "Generate a synthetic community dataset"),
    "walk": (cmd_walk, "Generate the random-walk corpus"),
    "train": (cmd_train, "Train node embeddings"),
    "score": (cmd_score, "Score labeled user pairs"),
    "evaluate": (cmd_evaluate, "AUC and ROC of a scores file"),
    "defend": (cmd_defend, "Apply an obfuscation mechanism"),
    "utility": (cmd_utility, "Utility of an obfuscated dataset"),
    "sweep": (cmd_sweep, "Run an experiment sweep"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobilink", description="Social-link inference from check-ins")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")
    common = _config_arguments()
    for name, (func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=func)
    return parser


def _validation_message(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{_flag(loc) if loc else 'config'}: {err['msg']}")
    return "invalid configuration: " + "; ".join(parts)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2

    overrides = {k: v for k, v in vars(args).items() if k not in ("func", "command", "config")}
    try:
        cfg = build_config(getattr(args, "config", None), **overrides)
        logging.basicConfig(level=getattr(logging, cfg.log_level.upper(), logging.INFO), format=LOG_FORMAT)
        outputs = args.func(cfg)
        _write_metadata(cfg, args.command, outputs)
    except ValidationError as e:
        print(f"error: {_validation_message(e)}", file=sys.stderr)
        return 2
    except (MobilinkError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
