# LPCR Shield - Core Configuration
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..advtrain.mixing import AdvMixConfig
from ..analysis.report import AnalysisConfig
from ..attack.types import AttackConfig
from ..dataset.types import DESK_DIMS, FULL_DIMS, ClassProfile, DatasetConfig
from ..model.types import TrainConfig
from ..utils.helpers import default_threads, read_json
from ..utils.rng import derive_seed
from .exceptions import ConfigurationError

DEFAULT_SEED = 20240229
VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseSettings):
    """Process-level settings with LPCR_ environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="LPCR_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = "INFO"
    log_json: bool = False
    log_file: Optional[str] = None
    threads: int = Field(default_factory=default_threads, ge=1)
    batch_eval_size: int = Field(default=256, ge=1)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level"""
        if v.upper() not in VALID_LOG_LEVELS:
            raise ValueError(f"Invalid log level. Must be one of: {VALID_LOG_LEVELS}")
        return v.upper()


class PathsConfig(BaseModel):
    """Output layout, relative to `root` unless absolute"""

    model_config = ConfigDict(extra="forbid")

    root: str = "runs/desk"
    dataset_dir: str = "dataset"
    model_file: str = "models/lpcr.bin"
    aa_model_file: str = "models/aa_lpcr.bin"
    transfer_model_file: str = "models/transfer.bin"
    attack_dir: str = "attack/lpcr"
    aa_attack_dir: str = "attack/aa_lpcr"
    report_dir: str = "report"

    def resolve(self, name: str) -> Path:
        value = Path(getattr(self, name))
        return value if value.is_absolute() else Path(self.root) / value


class RunConfig(BaseModel):
    """One document describing a whole pipeline run"""

    model_config = ConfigDict(extra="forbid")

    seed: int = DEFAULT_SEED
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    attack: AttackConfig = Field(default_factory=AttackConfig)
    advtrain: AdvMixConfig = Field(default_factory=AdvMixConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    def resolved(self) -> "RunConfig":
        """Fill every null section seed from the root seed and the section name"""
        updates: Dict[str, Any] = {}
        if self.dataset.seed is None:
            updates["dataset"] = self.dataset.model_copy(update={"seed": derive_seed(self.seed, "dataset")})
        if self.train.seed is None:
            updates["train"] = self.train.model_copy(update={"seed": derive_seed(self.seed, "train")})
        if self.advtrain.seed is None:
            updates["advtrain"] = self.advtrain.model_copy(update={"seed": derive_seed(self.seed, "advtrain")})
        analysis: Dict[str, int] = {}
        if self.analysis.transfer_seed is None:
            analysis["transfer_seed"] = derive_seed(self.seed, "analysis", "transfer")
        if self.analysis.random_patch_seed is None:
            analysis["random_patch_seed"] = derive_seed(self.seed, "analysis", "random_patch")
        if analysis:
            updates["analysis"] = self.analysis.model_copy(update=analysis)
        return self.model_copy(update=updates)

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _validated(payload: Dict[str, Any], source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or source
        raise ConfigurationError(location, first["msg"]) from e


def desk_profile() -> Dict[str, Any]:
    return {
        "dataset": {"per_class_count": 100, "image_dims": list(DESK_DIMS)},
        "train": {"epochs": 30},
        "paths": {"root": "runs/desk"},
    }


def full_profile() -> Dict[str, Any]:
    return {
        "dataset": {"image_dims": list(FULL_DIMS), "class_profile": ClassProfile.SKEWED.value},
        "train": {"epochs": 80},
        "paths": {"root": "runs/full"},
    }


PROFILES = {"desk": desk_profile, "full": full_profile}


def load_profile(name: str) -> RunConfig:
    if name not in PROFILES:
        raise ConfigurationError("profile", f"unknown profile '{name}'; choose from {sorted(PROFILES)}")
    return _validated(PROFILES[name](), f"profile:{name}")


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError("config", f"config file {path} does not exist")
    try:
        payload = read_json(path)
    except ValueError as e:
        raise ConfigurationError("config", f"{path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigurationError("config", f"{path} must hold a JSON object")
    return _validated(payload, str(path))


def apply_overrides(config: RunConfig, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    """Command-line --seed and --out win over file values.

    A new root seed also clears every section seed, including ones the file
    fixed, so `resolved()` derives them all from the override.
    """
    updates: Dict[str, Any] = {}
    if seed is not None:
        updates["seed"] = seed
        for section in ("dataset", "train", "advtrain"):
            updates[section] = getattr(config, section).model_copy(update={"seed": None})
        updates["analysis"] = config.analysis.model_copy(update={"transfer_seed": None, "random_patch_seed": None})
    if out is not None:
        updates["paths"] = config.paths.model_copy(update={"root": out})
    return config.model_copy(update=updates)


def get_settings() -> Settings:
    try:
        return Settings()
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationError(".".join(str(p) for p in first["loc"]), first["msg"]) from e
