"""Handedness inference and foot plant / max external rotation / release detection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pose import GeometryError, Handedness, JointId, PoseSequence, heading_xy, interior_angle
from .signal import argmax_in_range, derivative, local_minima, savgol_smooth

RHP_PELVIS_BAND = (-108.0, -76.0)
LHP_PELVIS_BAND = (82.0, 94.0)


@dataclass(frozen=True)
class EventConfig:
    ankle_height_ft: float = 0.95
    ankle_velocity_ft_per_frame: float = -0.008
    release_low_deg: float = 30.0
    release_gate_deg: float = 80.0
    smooth_window: int = 21
    smooth_order: int = 3


class EventDetectionError(RuntimeError):
    """A stage of event detection found no qualifying frame."""

    def __init__(self, reason: str, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.reason = reason
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class HandednessReport:
    handedness: Handedness
    delta_ankle: float
    mean_pelvis_rotation: float
    methods_agree: bool


@dataclass(frozen=True)
class EventSet:
    fp: int
    mer: int
    rel: int

    def __post_init__(self):
        if not (self.fp <= self.mer <= self.rel):
            raise ValueError(f"event order violated: fp={self.fp} mer={self.mer} rel={self.rel}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.fp, self.mer, self.rel)


def _in_band(theta: float, band: tuple[float, float]) -> bool:
    return band[0] <= theta <= band[1]


def infer_handedness(seq: PoseSequence) -> HandednessReport:
    la = seq.track(JointId.LEFT_ANKLE)
    ra = seq.track(JointId.RIGHT_ANKLE)
    delta = float(np.mean(la[:, 1] - ra[:, 1]))
    hips = seq.track(JointId.LEFT_HIP) - seq.track(JointId.RIGHT_HIP)
    rotation = float(np.mean(np.degrees(np.arctan2(hips[:, 1], hips[:, 0]))))
    rhp_agree = _in_band(rotation, RHP_PELVIS_BAND)
    lhp_agree = _in_band(rotation, LHP_PELVIS_BAND)
    if delta < 0:
        hand = Handedness.RHP
    elif delta > 0:
        hand = Handedness.LHP
    else:
        # exact tie: the pelvis check decides, RHP by default
        hand = Handedness.LHP if lhp_agree else Handedness.RHP
    agree = rhp_agree if hand is Handedness.RHP else lhp_agree
    return HandednessReport(hand, delta, rotation, bool(agree))


def elbow_flexion_raw(seq: PoseSequence, h: Handedness) -> np.ndarray:
    side = h.throwing_side
    sh = seq.track(h.joint(side, "shoulder"))
    el = seq.track(h.joint(side, "elbow"))
    wr = seq.track(h.joint(side, "wrist"))
    out = np.empty(seq.n_frames)
    for t in range(seq.n_frames):
        try:
            out[t] = 180.0 - interior_angle(sh[t], el[t], wr[t])
        except GeometryError as exc:
            raise GeometryError(f"frame {t}: {exc}") from None
    return out


def elbow_flexion_series(seq: PoseSequence, h: Handedness,
                         cfg: EventConfig = EventConfig()) -> np.ndarray:
    return savgol_smooth(elbow_flexion_raw(seq, h), cfg.smooth_window, cfg.smooth_order)


def detect_foot_plant(seq: PoseSequence, h: Handedness, cfg: EventConfig = EventConfig()) -> int:
    knee_z = savgol_smooth(seq.track(h.joint(h.lead_side, "knee"))[:, 2],
                           cfg.smooth_window, cfg.smooth_order)
    ankle_z = savgol_smooth(seq.track(h.joint(h.lead_side, "ankle"))[:, 2],
                            cfg.smooth_window, cfg.smooth_order)
    ankle_v = derivative(ankle_z)
    k = int(np.argmax(knee_z))
    after = np.arange(k + 1, seq.n_frames)
    ok = (ankle_z[after] < cfg.ankle_height_ft) & (ankle_v[after] > cfg.ankle_velocity_ft_per_frame)
    if not np.any(ok):
        tail = ankle_z[k + 1:] if k + 1 < seq.n_frames else ankle_z[k:]
        raise EventDetectionError(
            "foot_plant",
            "no frame after peak knee height with low, slow lead ankle",
            {"max_knee_frame": k, "min_ankle_height": float(np.min(tail))},
        )
    return int(after[np.argmax(ok)])


def detect_release(elbow, cfg: EventConfig = EventConfig()) -> int:
    s = np.asarray(elbow, dtype=float)
    above = np.flatnonzero(s > cfg.release_gate_deg)
    if above.size == 0:
        raise EventDetectionError("release_gate", f"elbow never exceeds {cfg.release_gate_deg} deg",
                                  {"max_elbow": float(np.max(s))})
    g = int(above[-1])
    for i in local_minima(s):
        if i > g and s[i] < cfg.release_low_deg:
            return i
    below = np.flatnonzero(s[g + 1:] < cfg.release_low_deg)
    if below.size == 0:
        raise EventDetectionError(
            "release_low",
            f"elbow never drops below {cfg.release_low_deg} deg after frame {g}",
            {"gate_frame": g, "min_after_gate": float(np.min(s[g:]))},
        )
    return g + 1 + int(below[0])


def detect_mer(elbow, fp: int, rel: int) -> int:
    return argmax_in_range(elbow, fp, rel)


def detect_events(seq: PoseSequence,
                  cfg: EventConfig = EventConfig()) -> tuple[HandednessReport, EventSet]:
    report = infer_handedness(seq)
    h = report.handedness
    fp = detect_foot_plant(seq, h, cfg)
    elbow = elbow_flexion_series(seq, h, cfg)
    rel = detect_release(elbow, cfg)
    if rel < fp:
        raise EventDetectionError("order", f"release frame {rel} precedes foot plant {fp}",
                                  {"fp": fp, "rel": rel})
    mer = detect_mer(elbow, fp, rel)
    return report, EventSet(fp, mer, rel)


def detection_record(episode_id: str, report: Optional[HandednessReport],
                     events: Optional[EventSet], failure: Optional[str] = None,
                     detail: Optional[str] = None) -> dict:
    """Per-episode row written by the ``detect`` command."""
    rec = {
        "episode_id": episode_id,
        "handedness": report.handedness.value if report else None,
        "delta_ankle": report.delta_ankle if report else None,
        "mean_pelvis_rotation": report.mean_pelvis_rotation if report else None,
        "methods_agree": report.methods_agree if report else None,
        "fp": events.fp if events else None,
        "mer": events.mer if events else None,
        "rel": events.rel if events else None,
        "status": "ok" if failure is None else "failed",
    }
    if failure is not None:
        rec["failure_reason"] = failure
        if detail:
            rec["failure_detail"] = detail
    return rec

