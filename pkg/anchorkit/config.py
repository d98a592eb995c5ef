import math
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CONFIG_ENV_VAR = "ANCHORKIT_CONFIG"
OUTPUT_ROOT_ENV_VAR = "ANCHORKIT_OUTPUT_ROOT"

# SNR (dB) is divided by this before it is fused into a network
SNR_NORMALIZER_DB = 20.0


class ChannelKind(str, Enum):
    AWGN = "awgn"
    RAYLEIGH = "rayleigh"


class ScheduleKind(str, Enum):
    TWO_STAGE = "two_stage"
    ITERATIVE = "iterative"
    SIMULTANEOUS = "simultaneous"


class DecoderKind(str, Enum):
    ATTENTION = "attention"
    CONV = "conv"
    RESNET = "resnet"
    VGG = "vgg"
    SYMMETRIC = "symmetric"


class DatasetSource(str, Enum):
    SYNTH = "synth"
    DIRECTORY = "directory"


class ChannelConfig(BaseModel):
    """One channel realisation: kind and SNR (dB)."""
    model_config = ConfigDict(extra="forbid")

    kind: ChannelKind = ChannelKind.AWGN
    snr_db: float = 10.0
    seed: int = 0
    # sigma = 0 override; the SNR still conditions the networks
    noiseless: bool = False
    # perfect-CSI equalization for Rayleigh fading
    equalize: bool = True

    @field_validator("snr_db")
    @classmethod
    def _finite_snr(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("snr_db must be finite")
        return v


class TrainConfig(BaseModel):
    """Optimizer and schedule settings."""
    model_config = ConfigDict(extra="forbid")

    schedule: ScheduleKind = ScheduleKind.TWO_STAGE
    lr: float = 5e-4
    batch_size: int = 40
    snr_set_db: List[float] = Field(default_factory=lambda: [1.0, 4.0, 7.0, 10.0, 13.0])
    epochs_stage1: int = 30
    epochs_per_decoder: int = 30
    iterative_cycles: int = 30
    epochs_simultaneous: int = 30
    seed: int = 0
    channel: ChannelKind = ChannelKind.AWGN
    rate: float = 1.0 / 16.0
    noiseless: bool = False
    equalize: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    stage2_workers: int = 1

    @field_validator("lr")
    @classmethod
    def _lr_positive(cls, v: float) -> float:
        if not v >= 0.0:
            raise ValueError("lr must be >= 0 (0 freezes every parameter)")
        return v

    @field_validator("batch_size", "stage2_workers")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("epochs_stage1", "epochs_per_decoder", "iterative_cycles", "epochs_simultaneous")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("epoch counts must be >= 0")
        return v

    @field_validator("snr_set_db")
    @classmethod
    def _snr_set(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("snr_set_db must not be empty")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("snr_set_db values must be finite")
        return v

    @field_validator("rate")
    @classmethod
    def _rate_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("rate must be in (0, 1]")
        return v

    def channel_config(self, snr_db: float) -> ChannelConfig:
        return ChannelConfig(kind=self.channel, snr_db=snr_db, seed=self.seed,
                             noiseless=self.noiseless, equalize=self.equalize)


class ModelSettings(BaseModel):
    """Architecture knobs. Full-scale widths are [64, 128]."""
    model_config = ConfigDict(extra="forbid")

    widths: List[int] = Field(default_factory=lambda: [16, 32])
    depth_scale: int = 1
    evaluate_symmetric: bool = False

    @field_validator("widths")
    @classmethod
    def _two_widths(cls, v: List[int]) -> List[int]:
        if len(v) != 2 or min(v) < 1:
            raise ValueError("widths must be two positive channel counts")
        return v

    @field_validator("depth_scale")
    @classmethod
    def _depth(cls, v: int) -> int:
        if v < 1:
            raise ValueError("depth_scale must be >= 1")
        return v


class DataSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: DatasetSource = DatasetSource.SYNTH
    train_count: int = 512
    eval_count: int = 128
    patch_size: int = 32
    seed: int = 1234
    path: Optional[Path] = None
    eval_path: Optional[Path] = None
    # random crops per image when patching directories; None -> full grid
    crops_per_image: Optional[int] = None

    @model_validator(mode="after")
    def _directory_needs_path(self) -> "DataSettings":
        if self.source == DatasetSource.DIRECTORY and self.path is None:
            raise ValueError("data.path is required when data.source is 'directory'")
        if self.train_count < 1 or self.eval_count < 1:
            raise ValueError("train_count and eval_count must be >= 1")
        return self


class ReportSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eval_snr_db: List[float] = Field(default_factory=lambda: [1.0, 4.0, 7.0, 10.0, 13.0])
    workers: int = 1
    eval_batch_size: int = 64
    dump_reconstructions: int = 4

    @field_validator("eval_snr_db")
    @classmethod
    def _eval_snr(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("eval_snr_db must not be empty")
        return v


class LoggingSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    level: str = "INFO"
    file: Optional[Path] = None
    max_size_mb: int = 100
    backup_count: int = 5


class MsSsimConfig(BaseModel):
    """MS-SSIM constants (Wang et al. reference values)."""
    model_config = ConfigDict(extra="forbid")

    scales: int = 5
    weights: Tuple[float, ...] = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    max_val: float = 1.0

    @model_validator(mode="after")
    def _weights_cover_scales(self) -> "MsSsimConfig":
        if self.scales < 1:
            raise ValueError("scales must be >= 1")
        if len(self.weights) < self.scales or min(self.weights) <= 0:
            raise ValueError("need one positive weight per scale")
        return self

    @property
    def c1(self) -> float:
        return (self.k1 * self.max_val) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.max_val) ** 2


DEFAULT_ROSTER = [DecoderKind.ATTENTION, DecoderKind.CONV, DecoderKind.RESNET, DecoderKind.VGG]


class ExperimentConfig(BaseModel):
    """Root configuration of one experiment run."""
    model_config = ConfigDict(extra="forbid")

    train: TrainConfig = Field(default_factory=TrainConfig)
    model: ModelSettings = Field(default_factory=ModelSettings)
    data: DataSettings = Field(default_factory=DataSettings)
    report: ReportSettings = Field(default_factory=ReportSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    roster: List[DecoderKind] = Field(default_factory=lambda: list(DEFAULT_ROSTER))
    output_dir: Path = Path("outputs")

    @field_validator("roster")
    @classmethod
    def _roster(cls, v: List[DecoderKind]) -> List[DecoderKind]:
        if not v:
            raise ValueError("roster must name at least one decoder")
        if len(set(v)) != len(v):
            raise ValueError("roster entries must be unique")
        return v

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
        return cls(**data)

    def to_yaml(self, path: Union[str, Path]) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(self.dump_yaml())

    def dump_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), default_flow_style=False, sort_keys=False)

    def with_overrides(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Apply dotted-key overrides (``train.lr``) and re-validate."""
        data = self.model_dump(mode="json")
        for dotted, value in overrides.items():
            node = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                if not isinstance(node.get(key), dict):
                    raise KeyError(f"unknown config section {dotted!r}")
                node = node[key]
            node[leaf] = value
        return ExperimentConfig(**data)

    def resolved_output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV_VAR)
        if root and not self.output_dir.is_absolute():
            return Path(root) / self.output_dir
        return self.output_dir


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Config from ``path``, else ``$ANCHORKIT_CONFIG``, else built-in defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return ExperimentConfig.from_yaml(path)
    return ExperimentConfig()
