"""Per-location and per-user features the heuristic baselines are built from."""
from typing import Tuple

import numpy as np
from scipy.stats import entropy

from ..errors import ParameterError
from ..models import CheckInDataset

EARTH_RADIUS_KM = 6371.0088


def location_entropy(ds: CheckInDataset, location: str) -> float:
    """Shannon entropy (nats) of the visitor distribution at ``location``."""
    counts = np.fromiter(ds.visitors(location).values(), dtype=float)
    return float(entropy(counts))


def location_popularity(ds: CheckInDataset, location: str) -> int:
    """Distinct visitors."""
    return len(ds.visitors(location))


def _home(ds: CheckInDataset, user: str, weighted: bool) -> Tuple[float, float]:
    locs = sorted(ds.locations_of(user))
    if not locs:
        raise ParameterError(f"user '{user}' has no check-ins")
    coords = np.array([ds.location_coords[l] for l in locs], dtype=float)
    w = np.array([ds.count(user, l) for l in locs], dtype=float) if weighted else None
    lat, lon = np.average(coords, axis=0, weights=w)
    return float(lat), float(lon)


def home_location(ds: CheckInDataset, user: str) -> Tuple[float, float]:
    """Check-in-weighted mean of the coordinates in ω(u)."""
    return _home(ds, user, weighted=True)


def mean_home_location(ds: CheckInDataset, user: str) -> Tuple[float, float]:
    """Unweighted mean over distinct locations."""
    return _home(ds, user, weighted=False)


def haversine(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """Great-circle distance in km."""
    lat1, lon1, lat2, lon2 = np.radians([a[0], a[1], b[0], b[1]])
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return float(2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(min(1.0, h))))
