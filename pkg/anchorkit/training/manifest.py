"""Run manifest: what a training run was configured with and what it wrote."""
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..config import ExperimentConfig

MANIFEST_NAME = "manifest.yaml"


class SnapshotEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: int
    cycle: int
    decoder: str
    encoder_checksum: str
    decoder_checksum: str
    encoder_file: Optional[str] = None
    decoder_file: Optional[str] = None


class RunManifest(BaseModel):
    """Checkpoint paths are relative to the manifest's directory."""
    model_config = ConfigDict(extra="forbid")

    anchorkit_version: str = __version__
    schedule: str
    seed: int
    config: Dict[str, Any]
    checkpoints: Dict[str, str] = Field(default_factory=dict)
    checksums: Dict[str, str] = Field(default_factory=dict)
    snapshots: List[SnapshotEntry] = Field(default_factory=list)
    loss_curve: Optional[str] = None

    @classmethod
    def for_config(cls, cfg: ExperimentConfig) -> "RunManifest":
        return cls(schedule=cfg.train.schedule.value, seed=cfg.train.seed, config=cfg.model_dump(mode="json"))

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(**self.config)

    def add_checkpoint(self, role: str, relpath: str, checksum: str) -> None:
        self.checkpoints[role] = relpath
        self.checksums[role] = checksum

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "RunManifest":
        with open(path, "r") as f:
            return cls(**(yaml.safe_load(f) or {}))

    def to_yaml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.model_dump(mode="json"), f, default_flow_style=False, sort_keys=False)
        return path
