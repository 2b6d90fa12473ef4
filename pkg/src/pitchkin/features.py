"""Event-anchored feature vector: raw pose, biomechanical metrics, temporal deltas, handedness.

Layout (229 values with the default metric roster)::

    pose.<EVT>.<joint>.<axis>   17 joints x 3 axes x 3 events = 153
    bio.<EVT>.<metric>          15 metrics x 3 events         =  45
    delta.<TRANS>.<metric>      15 metrics x 2 transitions    =  30
    meta.h_rhp                                                 =   1
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .events import EventSet
from .pose import (JOINT_NAMES, GeometryError, Handedness, JointId, PoseFrame, PoseSequence,
                   heading_xy, interior_angle, vector_angle, wrap_degrees)

EVENTS = ("FP", "MER", "REL")
TRANSITIONS = ("FP_MER", "MER_REL")
AXES = ("x", "y", "z")
MIN_HEIGHT_FT = 1e-6
FEATURE_CSV_VERSION = 1

COG_WEIGHTS = {
    JointId.PELVIS: 0.30,
    JointId.LEFT_HIP: 0.08, JointId.RIGHT_HIP: 0.08,
    JointId.LEFT_SHOULDER: 0.07, JointId.RIGHT_SHOULDER: 0.07,
    JointId.LEFT_KNEE: 0.06, JointId.RIGHT_KNEE: 0.06,
    JointId.LEFT_ELBOW: 0.04, JointId.RIGHT_ELBOW: 0.04,
    JointId.LEFT_ANKLE: 0.05, JointId.RIGHT_ANKLE: 0.05,
    JointId.LEFT_WRIST: 0.03, JointId.RIGHT_WRIST: 0.03,
    JointId.NECK: 0.04,
}
_COG_W = np.zeros(len(JointId))
for _j, _w in COG_WEIGHTS.items():
    _COG_W[int(_j)] = _w
_COG_W /= _COG_W.sum()


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class BiomechMetrics:
    lead_knee_flexion: float
    trail_knee_flexion: float
    throwing_elbow_flexion: float
    glove_elbow_flexion: float
    trunk_forward_tilt: float
    trunk_lateral_tilt: float
    trunk_rotation: float
    pelvis_rotation: float
    hip_shoulder_separation: float
    throwing_shoulder_abduction: float
    lead_shin_angle: float
    trail_shin_angle: float
    cog_x: float
    cog_y: float
    cog_z: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


BIOMECH_METRICS = tuple(f.name for f in fields(BiomechMetrics))
LINEAR_METRICS = frozenset({"cog_x", "cog_y", "cog_z"})


def body_height(frame: PoseFrame, h: Handedness) -> float:
    """Per-frame height proxy: distance nose to lead ankle."""
    return float(np.linalg.norm(frame[JointId.NOSE] - frame[h.joint(h.lead_side, "ankle")]))


def _metric(name: str, fn, *args) -> float:
    try:
        return fn(*args)
    except GeometryError as exc:
        raise GeometryError(f"{name}: {exc}") from None


def compute_biomech(frame: PoseFrame, h: Handedness) -> BiomechMetrics:
    J = lambda side, part: frame[h.joint(side, part)]  # noqa: E731
    lead, trail = h.lead_side, h.trail_side
    throw, glove = h.throwing_side, h.glove_side

    def flexion(side, a, b, c):
        return 180.0 - interior_angle(J(side, a), J(side, b), J(side, c))

    pelvis = frame[JointId.PELVIS]
    mid_sh = 0.5 * (frame[JointId.LEFT_SHOULDER] + frame[JointId.RIGHT_SHOULDER])
    trunk = mid_sh - pelvis
    if not np.any(trunk):
        raise GeometryError("trunk vector is zero")
    sign = 1.0 if h is Handedness.RHP else -1.0
    lateral = sign * float(np.degrees(np.arctan2(trunk[0], trunk[2])))
    forward = float(np.degrees(np.arctan2(trunk[1], trunk[2])))
    trunk_rot = _metric("trunk_rotation", heading_xy,
                        frame[JointId.LEFT_SHOULDER] - frame[JointId.RIGHT_SHOULDER])
    pelvis_rot = _metric("pelvis_rotation", heading_xy,
                         frame[JointId.LEFT_HIP] - frame[JointId.RIGHT_HIP])
    abduction = _metric("throwing_shoulder_abduction", vector_angle,
                        J(throw, "elbow") - J(throw, "shoulder"), pelvis - mid_sh)
    up = np.array([0.0, 0.0, 1.0])
    height = body_height(frame, h)
    if height < MIN_HEIGHT_FT:
        raise FeatureError(f"degenerate body height {height:g} ft")
    cog = (_COG_W @ frame.joints - pelvis) / height
    return BiomechMetrics(
        lead_knee_flexion=_metric("lead_knee_flexion", flexion, lead, "hip", "knee", "ankle"),
        trail_knee_flexion=_metric("trail_knee_flexion", flexion, trail, "hip", "knee", "ankle"),
        throwing_elbow_flexion=_metric("throwing_elbow_flexion", flexion,
                                       throw, "shoulder", "elbow", "wrist"),
        glove_elbow_flexion=_metric("glove_elbow_flexion", flexion,
                                    glove, "shoulder", "elbow", "wrist"),
        trunk_forward_tilt=forward,
        trunk_lateral_tilt=lateral,
        trunk_rotation=trunk_rot,
        pelvis_rotation=pelvis_rot,
        hip_shoulder_separation=wrap_degrees(trunk_rot - pelvis_rot),
        throwing_shoulder_abduction=abduction,
        lead_shin_angle=_metric("lead_shin_angle", vector_angle,
                                J(lead, "knee") - J(lead, "ankle"), up),
        trail_shin_angle=_metric("trail_shin_angle", vector_angle,
                                 J(trail, "knee") - J(trail, "ankle"), up),
        cog_x=float(cog[0]), cog_y=float(cog[1]), cog_z=float(cog[2]),
    )


# -- names ------------------------------------------------------------------

def pose_names(tokens: Sequence[str] = EVENTS) -> list[str]:
    return [f"pose.{e}.{j}.{a}" for e in tokens for j in JOINT_NAMES for a in AXES]


def biomech_names(metrics: Sequence[str] = BIOMECH_METRICS) -> list[str]:
    return [f"bio.{e}.{m}" for e in EVENTS for m in metrics]


def delta_names(metrics: Sequence[str] = BIOMECH_METRICS) -> list[str]:
    return [f"delta.{t}.{m}" for t in TRANSITIONS for m in metrics]


HANDEDNESS_NAME = "meta.h_rhp"


def feature_names(metrics: Sequence[str] = BIOMECH_METRICS) -> list[str]:
    return pose_names() + biomech_names(metrics) + delta_names(metrics) + [HANDEDNESS_NAME]


FEATURE_NAMES = tuple(feature_names())


# -- blocks -----------------------------------------------------------------

def normalized_pose(frame: PoseFrame, h: Handedness) -> np.ndarray:
    height = body_height(frame, h)
    if height < MIN_HEIGHT_FT:
        raise FeatureError(f"degenerate body height {height:g} ft")
    return ((frame.joints - frame[JointId.PELVIS]) / height).ravel()


def _check_events(seq: PoseSequence, ev: EventSet) -> None:
    if not (0 <= ev.fp and ev.rel < seq.n_frames):
        raise FeatureError(f"events {ev.as_tuple()} outside sequence of {seq.n_frames} frames")


def raw_pose_features(seq: PoseSequence, ev: EventSet, h: Handedness) -> np.ndarray:
    _check_events(seq, ev)
    return np.concatenate([normalized_pose(seq.frame(t), h) for t in ev.as_tuple()])


def biomech_features(seq: PoseSequence, ev: EventSet, h: Handedness,
                     metrics: Sequence[str] = BIOMECH_METRICS) -> np.ndarray:
    _check_events(seq, ev)
    idx = [BIOMECH_METRICS.index(m) for m in metrics]
    return np.concatenate([compute_biomech(seq.frame(t), h).as_array()[idx]
                           for t in ev.as_tuple()])


def temporal_deltas(bio, metrics: Sequence[str] = BIOMECH_METRICS) -> np.ndarray:
    b = np.asarray(bio, dtype=float).reshape(len(EVENTS), len(metrics))
    d = np.concatenate([b[1] - b[0], b[2] - b[1]]).reshape(2, len(metrics))
    angular = np.array([m not in LINEAR_METRICS for m in metrics])
    d[:, angular] = wrap_degrees(d[:, angular])
    return d.ravel()


def assemble(seq: PoseSequence, ev: EventSet, h: Handedness,
             metrics: Sequence[str] = BIOMECH_METRICS) -> np.ndarray:
    pose = raw_pose_features(seq, ev, h)
    bio = biomech_features(seq, ev, h, metrics)
    delta = temporal_deltas(bio, metrics)
    flag = np.array([1.0 if h is Handedness.RHP else 0.0])
    return np.concatenate([pose, bio, delta, flag])


def uniform_frames(n_frames: int, k: int) -> np.ndarray:
    if k < 2:
        raise FeatureError(f"need at least 2 sampled frames, got {k}")
    if k > n_frames:
        raise FeatureError(f"cannot sample {k} frames from {n_frames}")
    return np.rint(np.linspace(0, n_frames - 1, k)).astype(int)


def uniform_sampling_names(k: int) -> list[str]:
    return pose_names([f"U{i}" for i in range(k)]) + [HANDEDNESS_NAME]


def uniform_sampling_features(seq: PoseSequence, k: int, h: Handedness) -> np.ndarray:
    frames = uniform_frames(seq.n_frames, k)
    pose = np.concatenate([normalized_pose(seq.frame(t), h) for t in frames])
    return np.concatenate([pose, [1.0 if h is Handedness.RHP else 0.0]])


def select_columns(names: Sequence[str], prefixes: Iterable[str]) -> np.ndarray:
    """Indices of features whose name starts with any prefix (order preserved)."""
    prefixes = tuple(prefixes)
    return np.array([i for i, n in enumerate(names) if n.startswith(prefixes)], dtype=int)


# Named feature subsets used by the ablation runs.
CONFIGURATIONS = {
    "pose": ("pose.", "meta."),
    "pose+biomech": ("pose.", "bio.", "meta."),
    "pose+biomech+delta": ("pose.", "bio.", "delta.", "meta."),
}


# -- CSV --------------------------------------------------------------------

def write_feature_csv(path, names: Sequence[str], rows: Iterable[tuple[str, Optional[str], np.ndarray]],
                      meta: Optional[dict] = None) -> None:
    """The first line is a ``#`` comment carrying the format version and ``meta`` as key=value."""
    header = {"version": FEATURE_CSV_VERSION, **(meta or {})}
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode_id", "label", *names])
        for eid, label, values in rows:
            w.writerow([eid, label or "", *(repr(float(v)) for v in values)])


def read_feature_meta(path) -> dict:
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise FeatureError(f"{path}: missing version line")
    meta = dict(tok.split("=", 1) for tok in first[1:].split())
    if int(meta.get("version", -1)) != FEATURE_CSV_VERSION:
        raise FeatureError(f"{path}: unsupported feature file version {meta.get('version')}")
    return meta


def read_feature_csv(path) -> tuple[list[str], list[str], list[Optional[str]], np.ndarray]:
    read_feature_meta(path)
    with open(path, newline="") as fh:
        fh.readline()
        r = csv.reader(fh)
        header = next(r)
        if header[:2] != ["episode_id", "label"]:
            raise FeatureError(f"{path}: unexpected header start {header[:2]}")
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(r, 3):
            if len(row) != len(header):
                raise FeatureError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            ids.append(row[0])
            labels.append(row[1] or None)
            rows.append([float(v) for v in row[2:]])
    X = np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)
    return header[2:], ids, labels, X
