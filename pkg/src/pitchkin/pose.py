"""Pose sequence types, 3D geometry helpers and the pose JSONL format.

Coordinates are in feet: x lateral, y toward home plate, z vertical.
No unit conversion happens on ingest.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

N_JOINTS = 17
MIN_FRAMES = 100
PITCH_TYPES = ("FF", "FT", "SL", "CH", "CB", "SW", "FC", "SP")
POSE_FORMAT_VERSION = 1


class GeometryError(ValueError):
    """Raised on a degenerate (zero-length) vector."""


class IngestError(ValueError):
    """Raised when an episode cannot be turned into a PoseSequence."""

    def __init__(self, reason: str, message: str, episode_id: Optional[str] = None):
        super().__init__(message)
        self.reason = reason
        self.episode_id = episode_id


class JointId(enum.IntEnum):
    NOSE = 0
    NECK = 1
    LEFT_SHOULDER = 2
    RIGHT_SHOULDER = 3
    LEFT_ELBOW = 4
    RIGHT_ELBOW = 5
    LEFT_WRIST = 6
    RIGHT_WRIST = 7
    PELVIS = 8
    LEFT_HIP = 9
    RIGHT_HIP = 10
    LEFT_KNEE = 11
    RIGHT_KNEE = 12
    LEFT_ANKLE = 13
    RIGHT_ANKLE = 14
    LEFT_EYE = 15
    RIGHT_EYE = 16

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: str) -> "JointId":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown joint name {name!r}") from None

    def mirror(self) -> "JointId":
        if self.name.startswith("LEFT_"):
            return JointId[self.name.replace("LEFT_", "RIGHT_", 1)]
        if self.name.startswith("RIGHT_"):
            return JointId[self.name.replace("RIGHT_", "LEFT_", 1)]
        return self


JOINT_NAMES = tuple(j.label for j in JointId)
MIRROR_INDEX = np.array([j.mirror() for j in JointId])


class Handedness(enum.Enum):
    RHP = "RHP"
    LHP = "LHP"

    @property
    def lead_side(self) -> str:
        return "left" if self is Handedness.RHP else "right"

    @property
    def trail_side(self) -> str:
        return "right" if self is Handedness.RHP else "left"

    @property
    def throwing_side(self) -> str:
        return "right" if self is Handedness.RHP else "left"

    @property
    def glove_side(self) -> str:
        return "left" if self is Handedness.RHP else "right"

    def flipped(self) -> "Handedness":
        return Handedness.LHP if self is Handedness.RHP else Handedness.RHP

    def joint(self, side: str, part: str) -> JointId:
        """``h.joint(h.lead_side, "knee")`` -> LEFT_KNEE for a righty."""
        return JointId[f"{side.upper()}_{part.upper()}"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PoseFrame:
    joints: np.ndarray  # (17, 3)

    def __post_init__(self):
        arr = _frozen(self.joints)
        if arr.shape != (N_JOINTS, 3):
            raise ValueError(f"expected ({N_JOINTS}, 3) joints, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite joint coordinate")
        object.__setattr__(self, "joints", arr)

    def __getitem__(self, j: JointId) -> np.ndarray:
        return self.joints[int(j)]


@dataclass(frozen=True)
class PoseSequence:
    """One pitch episode: ``joints`` has shape (T, 17, 3)."""

    episode_id: str
    fps: float
    joints: np.ndarray
    label: Optional[str] = None
    min_frames: int = field(default=MIN_FRAMES, repr=False, compare=False)

    def __post_init__(self):
        arr = _frozen(self.joints)
        if arr.ndim != 3 or arr.shape[1:] != (N_JOINTS, 3):
            raise IngestError("bad_shape", f"expected (T, {N_JOINTS}, 3) joints, got {arr.shape}",
                              self.episode_id)
        if not self.fps > 0:
            raise IngestError("bad_fps", f"fps must be positive, got {self.fps}", self.episode_id)
        if arr.shape[0] < self.min_frames:
            raise IngestError("too_short", f"{arr.shape[0]} frames < {self.min_frames}",
                              self.episode_id)
        if not np.all(np.isfinite(arr)):
            raise IngestError("non_finite", "incomplete joint tracking (non-finite coordinate)",
                              self.episode_id)
        if self.label is not None and self.label not in PITCH_TYPES:
            raise IngestError("bad_label", f"unknown pitch type {self.label!r}", self.episode_id)
        object.__setattr__(self, "joints", arr)

    def __len__(self) -> int:
        return self.joints.shape[0]

    @property
    def n_frames(self) -> int:
        return self.joints.shape[0]

    def frame(self, t: int) -> PoseFrame:
        return PoseFrame(self.joints[t])

    @property
    def frames(self) -> list[PoseFrame]:
        return [PoseFrame(f) for f in self.joints]

    def track(self, j: JointId) -> np.ndarray:
        """(T, 3) trajectory of one joint."""
        return self.joints[:, int(j), :]

    def mirrored(self) -> "PoseSequence":
        """Negate x and swap left/right joints."""
        arr = self.joints[:, MIRROR_INDEX, :].copy()
        arr[..., 0] *= -1.0
        return PoseSequence(self.episode_id, self.fps, arr, self.label, self.min_frames)

    def transformed(self, scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> "PoseSequence":
        arr = self.joints * scale + np.asarray(offset, dtype=float)
        return PoseSequence(self.episode_id, self.fps, arr, self.label, self.min_frames)

    def to_record(self) -> dict:
        return {
            "version": POSE_FORMAT_VERSION,
            "episode_id": self.episode_id,
            "fps": self.fps,
            "label": self.label,
            "frames": self.joints.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict, min_frames: int = MIN_FRAMES) -> "PoseSequence":
        if not isinstance(rec, dict):
            raise IngestError("bad_record", "record is not a JSON object", None)
        eid = rec.get("episode_id")
        if rec.get("version", POSE_FORMAT_VERSION) != POSE_FORMAT_VERSION:
            raise IngestError("bad_version", f"unsupported pose format version {rec['version']}",
                              eid if isinstance(eid, str) else None)
        if not isinstance(eid, str):
            raise IngestError("bad_record", "missing episode_id", None)
        try:
            arr = np.asarray(rec["frames"], dtype=float)
            fps = float(rec["fps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError("bad_record", f"malformed record: {exc}", eid) from None
        return cls(eid, fps, arr, rec.get("label"), min_frames)


def interior_angle(a, b, c) -> float:
    """Angle in degrees at vertex ``b`` between rays b->a and b->c."""
    u = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    v = np.asarray(c, dtype=float) - np.asarray(b, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise GeometryError(f"degenerate ray at vertex {tuple(np.asarray(b, dtype=float))}")
    # atan2 keeps full precision near 0 and 180 where arccos does not
    return float(np.degrees(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v))))


def vector_angle(u, v) -> float:
    """Unsigned angle between two vectors, degrees."""
    return interior_angle(u, np.zeros(3), v)


def heading_xy(v) -> float:
    """atan2(v_y, v_x) in degrees, range (-180, 180]."""
    v = np.asarray(v, dtype=float)
    if v[0] == 0.0 and v[1] == 0.0:
        raise GeometryError("zero horizontal projection")
    return float(np.degrees(np.arctan2(v[1], v[0])))


def wrap_degrees(a):
    """Wrap angles to (-180, 180]."""
    w = np.mod(np.asarray(a, dtype=float) + 180.0, 360.0) - 180.0
    w = np.where(w == -180.0, 180.0, w)
    return float(w) if np.ndim(w) == 0 else w


def schema_table() -> list[dict]:
    return [{"ordinal": int(j), "name": j.label} for j in JointId]


def iter_jsonl_records(path) -> Iterator[tuple[int, dict]]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError("bad_json", f"{path}:{lineno}: {exc}") from None


def read_jsonl(path, min_frames: int = MIN_FRAMES) -> list[PoseSequence]:
    """Strict reader: any malformed episode raises with its line number."""
    out = []
    for lineno, rec in iter_jsonl_records(path):
        try:
            out.append(PoseSequence.from_record(rec, min_frames))
        except IngestError as exc:
            raise IngestError(exc.reason, f"{path}:{lineno} episode {exc.episode_id}: {exc}",
                              exc.episode_id) from None
    return out


def iter_episodes(path, min_frames: int = MIN_FRAMES):
    """Lenient reader: yields ``(lineno, sequence, error)`` with exactly one of the last two set."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, IngestError("bad_json", f"{path}:{lineno}: {exc}")
                continue
            try:
                yield lineno, PoseSequence.from_record(rec, min_frames), None
            except IngestError as exc:
                yield lineno, None, IngestError(
                    exc.reason, f"{path}:{lineno} episode {exc.episode_id}: {exc}", exc.episode_id)


def write_jsonl(path, seqs: Iterable[PoseSequence]) -> None:
    with open(Path(path), "w") as fh:
        for s in seqs:
            fh.write(json.dumps(s.to_record(), separators=(",", ":")))
            fh.write("\n")
