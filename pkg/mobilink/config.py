import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .embedding import TrainMode
from .errors import ParameterError
from .similarity import Measure


class PipelineConfig(BaseSettings):
    """Every knob of the attack/defense pipeline.

    Precedence: defaults < ``MOBILINK_*`` environment < config file < flags.
    """
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="MOBILINK_",
        extra="ignore", case_sensitive=False,
    )

    # Paths
    checkins: Optional[Path] = Field(default=None, description="Check-in CSV")
    social: Optional[Path] = Field(default=None, description="Social-link CSV")
    meta: Optional[Path] = Field(default=None, description="User-meta CSV (follower counts)")
    popularity: Optional[Path] = Field(default=None, description="Location popularity CSV")
    corpus: Optional[Path] = Field(default=None, description="Walk corpus dump to train from")
    embeddings: Optional[Path] = Field(default=None, description="Embedding dump to score with")
    scores: Optional[Path] = Field(default=None, description="Scores CSV to evaluate")
    obfuscated: Optional[Path] = Field(default=None, description="Obfuscated check-in CSV")
    output_dir: Path = Field(default=Path("exports"))

    # Attack hyperparameters
    t_w: int = Field(default=20, ge=1, description="Walks per user")
    l_w: int = Field(default=100, ge=2, description="Nodes per walk")
    dim: int = Field(default=128, ge=1)
    window: int = Field(default=10, ge=1)
    negatives: int = Field(default=5, ge=1)
    learning_rate: float = Field(default=0.025, gt=0)
    epochs: int = Field(default=5, ge=1)
    first_epoch: int = Field(default=0, ge=0, description="Epoch index to resume from when --embeddings holds a saved model")
    unigram_power: float = Field(default=0.75, ge=0)
    measure: Measure = Field(default=Measure.COSINE)
    model: Optional[str] = Field(default=None, description="Baseline model instead of the embedding attack")

    # Preprocessing
    min_checkins: int = Field(default=20, ge=0)
    min_distinct_locations: int = Field(default=2, ge=1)
    percentile_low: float = Field(default=10.0, ge=0, le=100)
    percentile_high: float = Field(default=90.0, ge=0, le=100)
    cell_deg: Optional[float] = Field(default=None, gt=0)

    # Defense
    mechanism: Optional[str] = Field(default=None, description="hiding, replacement or generalization")
    rho: float = Field(default=0.5, ge=0, le=1)
    walk_steps: int = Field(default=15, ge=1)
    geo_level: str = Field(default="low")
    sem_level: str = Field(default="low")

    # Synthetic data
    synth_users: int = Field(default=500, ge=1)
    synth_locations: int = Field(default=200, ge=1)
    synth_communities: int = Field(default=20, ge=1)
    synth_checkins_per_user: int = Field(default=40, ge=0)
    synth_friend_prob: float = Field(default=0.3, ge=0, le=1)
    synth_noise_prob: float = Field(default=0.2, ge=0, le=1)

    # Sweeps
    experiment: str = Field(default="attack")
    grid_cells: List[float] = Field(default_factory=list)
    min_checkin_thresholds: List[int] = Field(default_factory=list)
    rhos: List[float] = Field(default_factory=list)
    walk_steps_list: List[int] = Field(default_factory=list)
    walk_lengths: List[int] = Field(default_factory=list)
    walk_times: List[int] = Field(default_factory=list)
    dims: List[int] = Field(default_factory=list)
    generalization_levels: List[str] = Field(default_factory=list)
    stratify_max_k: Optional[int] = Field(default=None, ge=0)

    # Run control
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    deterministic: bool = Field(default=True)
    log_level: str = Field(default="INFO")

    @field_validator("walk_steps")
    @classmethod
    def _odd_walk_steps(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("walk_steps needs to be odd so the walk stops at a location")
        return v

    @field_validator("mechanism")
    @classmethod
    def _known_mechanism(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ("hiding", "replacement", "generalization"):
            raise ValueError(f"unknown mechanism '{v}'")
        return v

    @field_validator("geo_level", "sem_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        if v not in ("low", "high"):
            raise ValueError(f"level must be 'low' or 'high', got '{v}'")
        return v

    @model_validator(mode="after")
    def _percentile_order(self) -> "PipelineConfig":
        if not self.percentile_low < self.percentile_high:
            raise ValueError("percentile_low must be < percentile_high")
        return self

    @property
    def train_mode(self) -> TrainMode:
        return TrainMode.DETERMINISTIC if self.deterministic else TrainMode.PARALLEL

    def public_dict(self) -> Dict[str, Any]:
        """JSON-safe snapshot for run metadata and report rows."""
        return json.loads(self.model_dump_json())


def load_config_file(path: Path) -> Dict[str, Any]:
    """Flat JSON object; nested values and unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParameterError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParameterError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must hold a flat JSON object")
    for key, value in data.items():
        if key not in PipelineConfig.model_fields:
            raise ParameterError(f"unknown config key '{key}' in {path}")
        if isinstance(value, dict):
            raise ParameterError(f"config key '{key}' must not be nested")
    return data


def build_config(path: Optional[Path] = None, **overrides: Any) -> PipelineConfig:
    """Merge the config file and flag overrides (flags win)."""
    values: Dict[str, Any] = load_config_file(path) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


_config: Optional[PipelineConfig] = None


def get_config() -> PipelineConfig:
    """Process-wide config from defaults and environment (for test patching)."""
    global _config
    if _config is None:
        _config = PipelineConfig()
    return _config
