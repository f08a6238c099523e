"""CSV and JSON outputs. Every file is written to ``<path>.tmp`` and moved into place."""
import csv
import json
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, TextIO, Tuple

import pandas as pd

from .dataset import CHECKIN_COLUMNS, SOCIAL_COLUMNS
from .errors import ParameterError, SchemaError
from .models import CheckInDataset, SocialGraph

SCORE_COLUMNS = ["user_a", "user_b", "label", "score"]
REPORT_COLUMNS = ["experiment", "config_json", "seed", "n_pairs", "auc", "utility", "recovery_rate"]
ROC_COLUMNS = ["threshold", "fpr", "tpr"]
UTILITY_COLUMNS = ["user_id", "phi", "psi"]
CONTAINMENT_COLUMNS = ["generalized_id", "original_location_id"]

# user_id of the utility file's aggregate line; never a valid identifier
AGGREGATE_ROW = "*"


def _ensure_exports_dir(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


@contextmanager
def atomic_writer(path: Path) -> Iterator[TextIO]:
    path = Path(path)
    _ensure_exports_dir(path)
    tmp_path = path.with_name(path.name + ".tmp")
    try:
        with open(tmp_path, "w", newline="", encoding="utf-8") as f:
            yield f
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def fmt(x: Optional[float]) -> str:
    """Round-trippable float text; blank for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_checkins(ds: CheckInDataset, path: Path) -> Path:
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CHECKIN_COLUMNS)
        for c in ds.checkins:
            w.writerow([c.user, c.time, repr(float(c.lat)), repr(float(c.lon)), c.location, c.category_l1, c.category_l2])
    return Path(path)


def write_social(social: SocialGraph, path: Path) -> Path:
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SOCIAL_COLUMNS)
        w.writerows(social.sorted_edges())
    return Path(path)


def write_scores(path: Path, pairs: Sequence[Tuple[str, str]], scores: Sequence[float],
                 labels: Optional[Sequence[int]] = None, model: Optional[str] = None) -> Path:
    if len(pairs) != len(scores) or (labels is not None and len(labels) != len(pairs)):
        raise ParameterError("pairs, scores and labels must have the same length")
    columns = SCORE_COLUMNS + (["model"] if model else [])
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for n, ((u, v), s) in enumerate(zip(pairs, scores)):
            row = [u, v, "" if labels is None else int(labels[n]), fmt(s)]
            w.writerow(row + ([model] if model else []))
    return Path(path)


def read_scores(path: Path) -> Tuple[List[Tuple[str, str]], List[Optional[int]], List[float]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scores file not found: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    if list(df.columns[:4]) != SCORE_COLUMNS:
        raise SchemaError(f"{path.name} header {list(df.columns)} does not start with {SCORE_COLUMNS}", line=1)
    pairs, labels, scores = [], [], []
    for offset, (u, v, label, score) in enumerate(df[SCORE_COLUMNS].itertuples(index=False, name=None)):
        line = offset + 2
        if label not in ("", "0", "1"):
            raise SchemaError(f"label '{label}' is not 0, 1 or blank", line=line, field="label")
        try:
            scores.append(float(score))
        except ValueError:
            raise SchemaError(f"cannot parse '{score}' as float", line=line, field="score")
        pairs.append((u, v))
        labels.append(int(label) if label else None)
    return pairs, labels, scores


def write_report(rows: Iterable[Mapping[str, Any]], path: Path) -> Path:
    with atomic_writer(path) as f:
        w = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({
                "experiment": r["experiment"],
                "config_json": r["config_json"],
                "seed": r["seed"],
                "n_pairs": r["n_pairs"],
                "auc": fmt(r["auc"]),
                "utility": fmt(r.get("utility")),
                "recovery_rate": fmt(r.get("recovery_rate")),
            })
    return Path(path)


def write_roc(curve, path: Path) -> Path:
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ROC_COLUMNS)
        for t, x, y in zip(curve.thresholds, curve.fpr, curve.tpr):
            w.writerow([fmt(t), fmt(x), fmt(y)])
    return Path(path)


def write_utility(report, path: Path) -> Path:
    """One ``user_id,phi,psi`` row per user, then the ``*`` aggregate line."""
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(UTILITY_COLUMNS)
        for u, psi in sorted(report.per_user.items()):
            w.writerow([u, fmt(1.0 - psi), fmt(psi)])
        w.writerow([AGGREGATE_ROW, fmt(1.0 - report.aggregate), fmt(report.aggregate)])
    return Path(path)


def write_containment(containment: Mapping[str, Iterable[str]], path: Path) -> Path:
    with atomic_writer(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CONTAINMENT_COLUMNS)
        for gid in sorted(containment):
            for loc in sorted(containment[gid]):
                w.writerow([gid, loc])
    return Path(path)


def write_json(data: Dict[str, Any], path: Path) -> Path:
    with atomic_writer(path) as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return Path(path)
