import csv
from pathlib import Path
from typing import Iterable, List, Sequence

import pytest

from mobilink.config import PipelineConfig
from mobilink.dataset import generate_synthetic
from mobilink.models import CheckIn, CheckInDataset, SocialGraph

# (location, lat, lon, category_l1, category_l2)
VENUES = {
    "L1": (40.7101, -73.9901, "arts", "museum"),
    "L2": (40.7102, -73.9902, "arts", "gallery"),
    "L3": (40.7503, -73.9503, "food", "cafe"),
    "L4": (40.7804, -73.9204, "nightlife", "bar"),
}


def make_checkins(user: str, location: str, count: int, start: int = 1_500_000_000) -> List[CheckIn]:
    """``count`` check-ins of ``user`` at one of the VENUES."""
    lat, lon, l1, l2 = VENUES[location]
    return [CheckIn(user, start + n, lat, lon, location, l1, l2) for n in range(count)]


def build_dataset(visits: Iterable[Sequence]) -> CheckInDataset:
    """Dataset from (user, location, count) triples."""
    checkins: List[CheckIn] = []
    for user, location, count in visits:
        checkins.extend(make_checkins(user, location, count))
    return CheckInDataset(tuple(checkins))


@pytest.fixture
def tiny_dataset() -> CheckInDataset:
    """Four users over four venues.

    a: L1 x3, L2 x1     b: L2 x2, L3 x1     c: L3 x1, L4 x1     d: L1 x1, L4 x2
    """
    return build_dataset([
        ("a", "L1", 3), ("a", "L2", 1),
        ("b", "L2", 2), ("b", "L3", 1),
        ("c", "L3", 1), ("c", "L4", 1),
        ("d", "L1", 1), ("d", "L4", 2),
    ])


@pytest.fixture
def tiny_social() -> SocialGraph:
    return SocialGraph.from_pairs([("a", "b"), ("c", "d")])


@pytest.fixture(scope="session")
def small_synthetic():
    """Community dataset small enough for end-to-end tests."""
    return generate_synthetic(
        n_users=60, n_locations=40, n_communities=6, checkins_per_user=20,
        intra_friend_prob=0.5, noise_prob=0.1, seed=3,
    )


@pytest.fixture(scope="session")
def default_synthetic():
    return generate_synthetic(seed=0)


@pytest.fixture
def fast_config(tmp_path: Path) -> PipelineConfig:
    """Reduced hyperparameters; everything else at its default."""
    return PipelineConfig(
        t_w=4, l_w=20, dim=16, window=4, epochs=1,
        min_checkins=0, min_distinct_locations=1,
        output_dir=tmp_path / "out",
    )


@pytest.fixture
def write_csv(tmp_path: Path):
    """Write ``rows`` under ``header`` to ``tmp_path/name`` and return the path."""
    def _write(name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = tmp_path / name
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        return path
    return _write


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    """Keep MOBILINK_* variables and a stray .env out of PipelineConfig."""
    import os
    for key in list(os.environ):
        if key.upper().startswith("MOBILINK_"):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)
