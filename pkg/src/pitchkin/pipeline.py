"""Batch detection and feature extraction over many episodes."""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .events import EventConfig, EventDetectionError, EventSet, HandednessReport, detect_events
from .features import (BIOMECH_METRICS, FeatureError, assemble, feature_names,
                       uniform_sampling_features, uniform_sampling_names)
from .pose import GeometryError, PoseSequence

log = logging.getLogger(__name__)


@dataclass
class EpisodeResult:
    episode_id: str
    label: Optional[str]
    report: Optional[HandednessReport] = None
    events: Optional[EventSet] = None
    features: Optional[np.ndarray] = None
    failure: Optional[str] = None
    detail: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class FeatureTable:
    names: list
    episode_ids: list
    labels: list
    handedness: list
    X: np.ndarray
    failures: Counter = field(default_factory=Counter)

    def subset(self, prefixes: Sequence[str]) -> "FeatureTable":
        cols = [i for i, n in enumerate(self.names) if n.startswith(tuple(prefixes))]
        return FeatureTable([self.names[i] for i in cols], self.episode_ids, self.labels,
                            self.handedness, self.X[:, cols], self.failures)


def process_episode(seq: PoseSequence, cfg: EventConfig = EventConfig(),
                    metrics: Sequence[str] = BIOMECH_METRICS, sampling: str = "events",
                    k: int = 3) -> EpisodeResult:
    """Detect events and build the feature vector; failures are recorded, not raised."""
    res = EpisodeResult(seq.episode_id, seq.label)
    try:
        res.report, res.events = detect_events(seq, cfg)
        h = res.report.handedness
        if sampling == "events":
            res.features = assemble(seq, res.events, h, metrics)
        elif sampling == "uniform":
            res.features = uniform_sampling_features(seq, k, h)
        else:
            raise ValueError(f"unknown sampling strategy {sampling!r}")
    except EventDetectionError as exc:
        res.failure, res.detail = exc.reason, str(exc)
    except (GeometryError, FeatureError, ValueError) as exc:
        res.failure, res.detail = type(exc).__name__, str(exc)
    return res


def _process_star(args):
    return process_episode(*args)


def process_all(seqs: Sequence[PoseSequence], cfg: EventConfig = EventConfig(),
                metrics: Sequence[str] = BIOMECH_METRICS, sampling: str = "events", k: int = 3,
                workers: int = 1) -> list[EpisodeResult]:
    """Results come back in input order regardless of ``workers``."""
    jobs = [(s, cfg, tuple(metrics), sampling, k) for s in seqs]
    if workers <= 1:
        return [_process_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_process_star, jobs, chunksize=16))


def build_table(results: Sequence[EpisodeResult], metrics: Sequence[str] = BIOMECH_METRICS,
                sampling: str = "events", k: int = 3) -> FeatureTable:
    names = feature_names(metrics) if sampling == "events" else uniform_sampling_names(k)
    ok = [r for r in results if r.ok]
    failures = Counter(r.failure for r in results if not r.ok)
    if failures:
        log.info("skipped %d of %d episodes: %s", sum(failures.values()), len(results),
                 dict(failures))
    X = np.array([r.features for r in ok], dtype=float).reshape(len(ok), len(names))
    return FeatureTable(names, [r.episode_id for r in ok], [r.label for r in ok],
                        [r.report.handedness.value for r in ok], X, failures)


def extract_table(seqs: Sequence[PoseSequence], cfg: EventConfig = EventConfig(),
                  metrics: Sequence[str] = BIOMECH_METRICS, sampling: str = "events",
                  k: int = 3, workers: int = 1) -> FeatureTable:
    return build_table(process_all(seqs, cfg, metrics, sampling, k, workers), metrics, sampling, k)
