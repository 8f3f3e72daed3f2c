"""
Experiment configuration models (TOML file -> validated pydantic tree)
"""
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.autofuse.params import AUTO_WAYS, DEFAULT_TEMPERATURE
from src.fedsim.config import FedConfig, normalize_lrs
from src.interp.sweep import DEFAULT_GRID, check_grid
from src.utils.exceptions import ConfigurationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSource(str, Enum):
    SYNTH_LABEL = "synth_label"
    SYNTH_IMAGE = "synth_image"
    FILE = "file"


class PartitionKind(str, Enum):
    LABEL_SHIFT = "label_shift"
    COVARIATE_SHIFT = "covariate_shift"
    IID = "iid"


class SceneConfig(_Section):
    """Data source, partitioner and global test construction"""

    source: DataSource = Field(default=DataSource.SYNTH_LABEL, description="Where samples come from")
    path: Optional[str] = Field(default=None, description="FSDS file for source = 'file'")
    num_samples: int = Field(default=2000, ge=1, description="Synthetic sample count N")
    num_classes: int = Field(default=10, ge=2, description="Synthetic class count C")
    dim: int = Field(default=20, ge=1, description="Feature dimension of synth_label")
    class_sep: float = Field(default=3.0, ge=0.0, description="Class-centre distance of synth_label")
    noise: float = Field(default=1.0, ge=0.0, description="Gaussian noise scale")
    height: int = Field(default=8, ge=1, description="Image height of synth_image")
    width: int = Field(default=8, ge=1, description="Image width of synth_image")

    partition: PartitionKind = Field(default=PartitionKind.LABEL_SHIFT)
    num_clients: int = Field(default=10, ge=1, description="Clients K")
    shards_per_class: int = Field(default=3, ge=1, description="Label shift: shards S per class")
    shards_per_client: int = Field(default=3, ge=1, description="Label shift: classes m per client")
    strength: float = Field(default=0.5, ge=0.0, description="Covariate shift: transform strength")
    local_fraction: float = Field(default=0.8, gt=0.0, lt=1.0, description="Local train share")
    global_test: Literal["held_out", "union_of_local"] = Field(default="held_out")
    held_out_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_source(self):
        if self.source is DataSource.FILE and not self.path:
            raise ValueError("source = 'file' requires 'path'")
        return self


class ModelConfig(_Section):
    kind: Literal["mlp", "cnn"] = "mlp"
    hidden: List[int] = Field(default_factory=lambda: [64], description="Fully-connected widths")
    conv_channels: List[int] = Field(default_factory=lambda: [4, 8])
    kernel_size: int = Field(default=3, ge=1)
    split: Literal["per_layer", "coarse"] = Field(default="per_layer", description="Default block boundaries")
    boundaries: Optional[List[int]] = Field(default=None, description="Layer indices where blocks 2..L start")

    @field_validator("hidden", "conv_channels")
    @classmethod
    def positive_widths(cls, v):
        if any(w < 1 for w in v):
            raise ValueError("layer widths must be positive")
        return v


class FederationConfig(_Section):
    """FedConfig without the seed, which lives at the top level"""

    rounds: int = Field(default=200, ge=0)
    select_ratio: float = Field(default=1.0, gt=0.0, le=1.0)
    local_epochs: int = Field(default=2, ge=0)
    batch_size: int = Field(default=64, ge=1)
    lrs: List[float] = Field(default_factory=lambda: [0.01, 0.03, 0.05], min_length=1)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    max_local_steps: Optional[int] = Field(default=None, ge=1)
    record_every: int = Field(default=10, ge=1)

    @field_validator("lrs")
    @classmethod
    def validate_lrs(cls, v):
        return normalize_lrs(v)


class FusionConfig(_Section):
    temperature: float = Field(default=DEFAULT_TEMPERATURE, gt=0.0, description="Softmax temperature lambda")


class InterpConfig(_Section):
    alphas: List[float] = Field(default_factory=lambda: list(DEFAULT_GRID))
    betas: List[float] = Field(default_factory=lambda: list(DEFAULT_GRID))

    @field_validator("alphas", "betas")
    @classmethod
    def unit_grid(cls, v):
        try:
            check_grid(v, "interpolation")
        except ConfigurationError as e:
            raise ValueError(str(e)) from e
        return v


class CompareConfig(_Section):
    ways: Optional[List[str]] = Field(default=None, description="Way names; every way for L when omitted")
    select_metric: Literal["local", "global"] = "local"


class ExperimentConfig(_Section):
    seed: int = Field(default=0, ge=0, lt=2 ** 63)
    way: str = Field(default="AB", description="Way name or AutoCS / AutoSA / AutoHS")
    output_dir: Optional[str] = None
    scene: SceneConfig = Field(default_factory=SceneConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    federation: FederationConfig = Field(default_factory=FederationConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    interp: InterpConfig = Field(default_factory=InterpConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)

    def fed_config(self) -> FedConfig:
        return FedConfig(seed=self.seed, **self.federation.model_dump())

    @property
    def is_auto(self) -> bool:
        return self.way in AUTO_WAYS

    def effective(self) -> Dict[str, Any]:
        """Plain dict of the configuration after defaults; None values dropped for TOML"""
        return self.model_dump(mode="json", exclude_none=True)


def _format_errors(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{key}: {item['msg']}")
    return "; ".join(lines)


def parse_config(document: Dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(f"{source}: {_format_errors(e)}") from e


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read and validate a TOML experiment file; overrides replace top-level keys"""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            document = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    for key, value in (overrides or {}).items():
        if value is not None:
            document[key] = value
    return parse_config(document, str(path))
