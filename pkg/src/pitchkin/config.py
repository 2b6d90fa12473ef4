"""Pipeline configuration file (JSON) with one root seed."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from .evaluate import METRIC_JOINTS, SplitSpec
from .events import EventConfig
from .features import BIOMECH_METRICS
from .gbdt import TrainConfig

CONFIG_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    events: EventConfig = field(default_factory=EventConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    metrics: tuple = BIOMECH_METRICS
    metric_joints: dict = field(default_factory=lambda: {k: list(v) for k, v in METRIC_JOINTS.items()})
    workers: int = 1

    def __post_init__(self):
        unknown = set(self.metrics) - set(BIOMECH_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics in roster: {sorted(unknown)}")
        # nested seeds always follow the root seed
        object.__setattr__(self, "train", replace(self.train, seed=self.seed))
        object.__setattr__(self, "split", replace(self.split, seed=self.seed))
        object.__setattr__(self, "metrics", tuple(self.metrics))

    def to_dict(self) -> dict:
        train = asdict(self.train)
        split = asdict(self.split)
        train.pop("seed")
        split.pop("seed")
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "events": asdict(self.events),
            "train": train,
            "split": split,
            "metrics": list(self.metrics),
            "metric_joints": {k: list(v) for k, v in self.metric_joints.items()},
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        if d.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {d.get('version')}")
        defaults = cls()
        return cls(
            seed=int(d.get("seed", 0)),
            events=EventConfig(**d.get("events", {})),
            train=TrainConfig(**d.get("train", {})),
            split=SplitSpec(**d.get("split", {})),
            metrics=tuple(d.get("metrics", defaults.metrics)),
            metric_joints={k: list(v) for k, v in d.get("metric_joints", defaults.metric_joints).items()},
            workers=int(d.get("workers", 1)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}


def load_config(path: Optional[str | Path]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path) as fh:
        return PipelineConfig.from_dict(json.load(fh))


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(cfg.dumps())
