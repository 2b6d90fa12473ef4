"""Synthetic pitch deliveries with known handedness, event frames and labels.

Every episode is built for a right-hander and mirrored (x -> -x, left<->right)
for a left-hander, so the random draws do not depend on handedness.

Trajectories are shaped so the event rules fire exactly on the scripted
frames when there is no noise:

* the lead ankle descends on a parabola whose vertex sits just after foot
  plant, so its smoothed height and velocity are exact near the plant;
* the elbow flexion follows one cosine period between max external rotation
  and release, symmetric about both, so smoothing cannot move the peak or
  the valley.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .events import EventSet
from .pose import PITCH_TYPES, Handedness, JointId, PoseSequence, write_jsonl

PITCH_TYPE_COUNTS = {"FF": 38560, "FT": 18570, "SL": 16221, "CH": 12170,
                 "CB": 10456, "SW": 10225, "FC": 9743, "SP": 3616}
DEFAULT_CLASS_DISTRIBUTION = {k: v / sum(PITCH_TYPE_COUNTS.values()) for k, v in PITCH_TYPE_COUNTS.items()}
RHP_SHARE = 82453 / (82453 + 37108)

SIGNATURE_CHANNELS = ("tilt_fp", "tilt_mer", "tilt_rel", "roll_mer", "head_rel",
                      "timing", "cog_fp")
# Per-class codes in {-1, 0, 1}; every pair differs in at least three channels.
SIGNATURE_CODES = {
    "FF": (0, 0, 0, 0, 0, 0, 0),
    "FT": (1, -1, 0, 0, 1, 0, 0),
    "SL": (0, 1, 1, -1, 0, 1, 0),
    "CH": (0, 0, -1, 1, 1, 0, 1),
    "CB": (-1, 1, 0, 1, -1, 0, 0),
    "SW": (1, 0, 1, 0, 0, -1, -1),
    "FC": (-1, 0, 0, 0, 1, 1, -1),
    "SP": (0, -1, 1, 1, 0, 0, -1),
}
# Channel magnitudes at signature_scale = 1.
SIGNATURE_UNITS = {"tilt_fp": 4.0, "tilt_mer": 4.0, "tilt_rel": 4.0,  # deg
                   "roll_mer": 20.0,  # deg
                   "head_rel": 0.2, "cog_fp": 0.2,  # ft
                   "timing": 3.0}  # frames
# Feature families each channel is injected into, as (name prefixes, metric suffixes).
SIGNATURE_FAMILIES = {
    "tilt": (("bio.", "delta."), ("trunk_lateral_tilt",)),
    "roll_mer": (("pose.MER.left_wrist.", "pose.MER.right_wrist."), ("",)),
    "head_rel": (("pose.REL.nose.", "pose.REL.left_eye.", "pose.REL.right_eye."), ("",)),
    "timing": (("bio.", "delta."), ("throwing_elbow_flexion",)),
    "cog_fp": (("bio.", "delta."), ("cog_x", "cog_y", "cog_z")),
}
BUMP_WIDTH = 3.0  # frames, std of the transient signature bumps
ELBOW_HALF_PERIOD = 30  # frames between max external rotation and release
ANKLE_GROUND_FT = 0.25


@dataclass(frozen=True)
class SynthConfig:
    n_episodes: int = 1000
    class_distribution: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_DISTRIBUTION))
    handedness_ratio: float = RHP_SHARE
    fps: float = 30.0
    duration: tuple = (150, 220)
    noise_std: float = 0.02
    signature_scale: float = 1.0
    twin_classes: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        total = sum(self.class_distribution.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"class_distribution sums to {total}, not 1")
        if set(self.class_distribution) - set(PITCH_TYPES):
            raise ValueError("unknown class in class_distribution")
        if self.noise_std < 0 or self.signature_scale < 0:
            raise ValueError("noise_std and signature_scale must be >= 0")
        if not 0 <= self.handedness_ratio <= 1:
            raise ValueError("handedness_ratio must be in [0, 1]")
        lo, hi = self.duration
        if lo < 150 or hi < lo:
            raise ValueError("duration range must start at >= 150 frames")
        if self.twin_classes is not None:
            a, b = self.twin_classes
            if a not in PITCH_TYPES or b not in PITCH_TYPES or a == b:
                raise ValueError(f"bad twin pair {self.twin_classes}")

    def signature(self, label: str) -> np.ndarray:
        code = label
        if self.twin_classes is not None and label == self.twin_classes[1]:
            code = self.twin_classes[0]
        units = np.array([SIGNATURE_UNITS[c] for c in SIGNATURE_CHANNELS])
        return self.signature_scale * units * np.array(SIGNATURE_CODES[code], dtype=float)


@dataclass(frozen=True)
class SynthEpisode:
    sequence: PoseSequence
    truth_handedness: Handedness
    truth_events: EventSet
    truth_label: str

    def manifest_entry(self) -> dict:
        return {"episode_id": self.sequence.episode_id, "label": self.truth_label,
                "handedness": self.truth_handedness.value,
                "fp": self.truth_events.fp, "mer": self.truth_events.mer,
                "rel": self.truth_events.rel}


# -- trajectory helpers -----------------------------------------------------

def _smoothstep(t, a, b):
    x = np.clip((t - a) / (b - a), 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _bump(t, center):
    return np.exp(-0.5 * ((t - center) / BUMP_WIDTH) ** 2)


def _hermite(t, t0, t1, z0, z1, m0, m1):
    L = t1 - t0
    s = (t - t0) / L
    return ((2 * s**3 - 3 * s**2 + 1) * z0 + (s**3 - 2 * s**2 + s) * L * m0
            + (-2 * s**3 + 3 * s**2) * z1 + (s**3 - s**2) * L * m1)


def _dir(theta_deg):
    th = np.radians(theta_deg)
    return np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=-1)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def elbow_profile(t, mer, rel, lo, hi, plateau=10.0):
    """Flat, one cosine period peaking at ``mer`` and bottoming at ``rel``, then a soft rise."""
    D = rel - mer
    f = np.full(t.shape, float(lo))
    cos_part = (t >= mer - D) & (t <= rel + 11)
    f[cos_part] = lo + (hi - lo) * 0.5 * (1 + np.cos(np.pi * (t[cos_part] - mer) / D))
    t0 = rel + 11
    f0 = lo + (hi - lo) * 0.5 * (1 + np.cos(np.pi * (t0 - mer) / D))
    slope = -(hi - lo) * 0.5 * np.sin(np.pi * (t0 - mer) / D) * np.pi / D
    tail = t > t0
    f[tail] = f0 + plateau * np.tanh(slope * (t[tail] - t0) / plateau)
    return f


def lead_ankle_height(t, fp, vertex_lag, accel, peak, lift_frames=25, settle_frames=14):
    """Ground, lift, parabolic descent through foot plant, settle back to ground."""
    zg = ANKLE_GROUND_FT
    tc = fp + vertex_lag
    tq = tc - np.sqrt((peak - zg) / accel)
    t_lift = tq - lift_frames
    t_end = fp + 12
    t_settle = t_end + settle_frames
    z = np.full(t.shape, zg)
    vq = -2 * accel * (tc - tq)
    lift = (t >= t_lift) & (t < tq)
    z[lift] = _hermite(t[lift], t_lift, tq, zg, peak, 0.0, vq)
    para = (t >= tq) & (t <= t_end)
    z[para] = zg + accel * (tc - t[para]) ** 2
    settle = (t > t_end) & (t < t_settle)
    z_end = zg + accel * (tc - t_end) ** 2
    z[settle] = _hermite(t[settle], t_end, t_settle, z_end, zg, 2 * accel * (t_end - tc), 0.0)
    return z, t_lift, tq


def _rotate_in_plane(a, b, angle_deg):
    th = np.radians(angle_deg)[:, None]
    return np.cos(th) * a + np.sin(th) * b


# -- episode ----------------------------------------------------------------

def generate_episode(label: str, handedness: Handedness, cfg: SynthConfig = SynthConfig(),
                     seed: int = 0, episode_id: Optional[str] = None) -> SynthEpisode:
    if label not in PITCH_TYPES:
        raise ValueError(f"unknown pitch type {label!r}")
    rng = np.random.default_rng(seed)
    sig = dict(zip(SIGNATURE_CHANNELS, cfg.signature(label)))

    # timeline
    T = int(rng.integers(cfg.duration[0], cfg.duration[1] + 1))
    rel = T - 40 - int(rng.integers(0, 11))
    mer = rel - ELBOW_HALF_PERIOD
    gap = 12 + int(np.rint(sig["timing"])) + int(rng.integers(-1, 2))
    fp = mer - gap
    t = np.arange(T, dtype=float)

    # per-episode style
    vertex_lag = rng.uniform(0.45, 0.75)
    accel = rng.uniform(0.0032, 0.0038)
    ankle_peak = rng.uniform(1.4, 1.6)
    body = rng.uniform(0.92, 1.08)
    pelvis_heading0 = rng.uniform(-90.0, -86.0)
    trunk_twist = rng.uniform(-15.0, 15.0)
    tilt_base = rng.normal(0.0, 8.0)
    lean_base = rng.normal(0.0, 3.0)
    roll_base = rng.normal(0.0, 12.0)
    head_style = rng.normal(0.0, 0.05, size=3)
    elbow_hi = rng.uniform(110.0, 120.0)
    elbow_lo = rng.uniform(5.0, 10.0)
    stride = rng.uniform(3.6, 4.4)
    neck_style = rng.normal(0.0, 0.1, size=3)
    pelvis_style = rng.normal(0.0, 0.2, size=2)
    abduction_style = rng.uniform(-15.0, 15.0)
    swing_style = rng.uniform(-25.0, 25.0)

    # legs and pelvis
    ankle_z, t_lift, tq = lead_ankle_height(t, fp, vertex_lag, accel, ankle_peak)
    knee_peak = tq - 6
    stride_s = _smoothstep(t, t_lift, fp)
    pelvis = np.zeros((T, 3))
    pelvis[:, 1] = -0.45 * stride * _smoothstep(t, t_lift, fp + 8)
    pelvis[:, 2] = 3.0 - 0.35 * _smoothstep(t, fp - 10, fp + 10)
    pelvis_heading = pelvis_heading0 - 3.0 + 6.0 * _smoothstep(t, fp - 15, rel)
    hip_dir = _dir(pelvis_heading)
    l_hip = pelvis + 0.45 * hip_dir
    r_hip = pelvis - 0.45 * hip_dir
    facing = _dir(pelvis_heading - 90.0)

    l_ankle = np.zeros((T, 3))
    l_ankle[:, 0] = l_hip[0, 0]
    l_ankle[:, 1] = l_hip[0, 1] - stride * stride_s
    l_ankle[:, 2] = ankle_z
    r_ankle = np.zeros((T, 3))
    r_ankle[:, :2] = r_hip[0, :2]
    r_ankle[:, 2] = ANKLE_GROUND_FT

    l_knee = 0.5 * (l_hip + l_ankle) + 0.35 * facing
    l_knee[:, 2] = 1.6 + 1.1 * np.exp(-0.5 * ((t - knee_peak) / 7.0) ** 2)
    r_knee = 0.5 * (r_hip + r_ankle) + 0.3 * facing
    r_knee[:, 2] = 1.55 - 0.2 * _smoothstep(t, fp - 10, rel)

    # trunk
    tilt = (tilt_base + 8.0 * _smoothstep(t, fp - 10, rel + 10)
            + sig["tilt_fp"] * _bump(t, fp) + sig["tilt_mer"] * _bump(t, mer)
            + sig["tilt_rel"] * _bump(t, rel))
    lean = lean_base - 5.0 - 20.0 * _smoothstep(t, fp - 5, rel + 10)
    trunk = np.stack([np.tan(np.radians(tilt)), np.tan(np.radians(lean)), np.ones(T)], axis=1)
    t_hat = _unit(trunk)
    mid_sh = pelvis + 1.9 * body * t_hat
    trunk_heading = pelvis_heading + trunk_twist - 15.0 * (1 - _smoothstep(t, fp, rel))
    sh_dir = _dir(trunk_heading)
    l_sh = mid_sh + 0.7 * body * sh_dir
    r_sh = mid_sh - 0.7 * body * sh_dir
    neck = mid_sh + 0.3 * body * t_hat
    front = _dir(trunk_heading - 90.0)
    nose = neck + 0.5 * body * t_hat + 0.25 * body * front + head_style
    nose[:, 0] += sig["head_rel"] * _bump(t, rel)
    l_eye = nose + 0.1 * body * t_hat + 0.1 * body * sh_dir - 0.03 * front
    r_eye = nose + 0.1 * body * t_hat - 0.1 * body * sh_dir - 0.03 * front

    # throwing arm (right for the right-handed build)
    abduction = abduction_style + 30.0 + 65.0 * _smoothstep(t, fp - 25, fp - 5) - 35.0 * _smoothstep(t, rel + 5, rel + 25)
    swing = swing_style - 20.0 + 80.0 * _smoothstep(t, rel - 5, rel + 20)
    out = _unit(-sh_dir - np.sum(-sh_dir * t_hat, axis=1, keepdims=True) * t_hat)
    fwd = _unit(front - np.sum(front * t_hat, axis=1, keepdims=True) * t_hat)
    w = _unit(_rotate_in_plane(out, fwd, swing))
    ab = np.radians(abduction)[:, None]
    upper = _unit(np.cos(ab) * -t_hat + np.sin(ab) * w)
    r_el = r_sh + 1.0 * body * upper
    a = _unit(t_hat - np.sum(t_hat * upper, axis=1, keepdims=True) * upper)
    b = np.cross(upper, a)
    roll = roll_base + sig["roll_mer"] * _bump(t, mer)
    n_hat = _rotate_in_plane(a, b, roll)
    flex = np.radians(elbow_profile(t, mer, rel, elbow_lo, elbow_hi))[:, None]
    r_wr = r_el + 0.95 * body * (np.cos(flex) * upper + np.sin(flex) * n_hat)

    # glove arm
    k = _smoothstep(t, fp, rel)[:, None]
    reach = _unit(sh_dir + 0.2 * front)
    tuck = _unit(-t_hat + 0.5 * front)
    l_el = l_sh + 0.95 * body * _unit((1 - k) * reach + k * tuck)
    l_wr = l_el + 0.9 * body * _unit((1 - k) * reach + k * _unit(front + t_hat))

    J = np.empty((T, 17, 3))
    for j, arr in ((JointId.NOSE, nose), (JointId.NECK, neck),
                   (JointId.LEFT_SHOULDER, l_sh), (JointId.RIGHT_SHOULDER, r_sh),
                   (JointId.LEFT_ELBOW, l_el), (JointId.RIGHT_ELBOW, r_el),
                   (JointId.LEFT_WRIST, l_wr), (JointId.RIGHT_WRIST, r_wr),
                   (JointId.PELVIS, pelvis), (JointId.LEFT_HIP, l_hip), (JointId.RIGHT_HIP, r_hip),
                   (JointId.LEFT_KNEE, l_knee), (JointId.RIGHT_KNEE, r_knee),
                   (JointId.LEFT_ANKLE, l_ankle), (JointId.RIGHT_ANKLE, r_ankle),
                   (JointId.LEFT_EYE, l_eye), (JointId.RIGHT_EYE, r_eye)):
        J[:, int(j)] = arr
    # weight shift shows up as a pelvis offset against the rest of the body
    J[:, int(JointId.PELVIS), 1] += sig["cog_fp"] * _bump(t, fp)
    J[:, int(JointId.PELVIS), 1:] += pelvis_style
    J[:, int(JointId.NECK)] += neck_style
    if cfg.noise_std > 0:
        J = J + rng.normal(0.0, cfg.noise_std, size=J.shape)

    seq = PoseSequence(episode_id or f"synth-{seed}", cfg.fps, J, label)
    if handedness is Handedness.LHP:
        seq = seq.mirrored()
    return SynthEpisode(seq, handedness, EventSet(fp, mer, rel), label)


def signature_feature_mask(names) -> np.ndarray:
    """True for features belonging to a family that carries a class signature."""
    def hit(n):
        return any(n.startswith(pre) and n.endswith(suf)
                   for pre, suf in SIGNATURE_FAMILIES.values())
    return np.array([hit(n) for n in names], dtype=bool)


# -- dataset ----------------------------------------------------------------

def allocate_counts(n: int, distribution: dict) -> dict:
    """Largest-remainder apportionment of ``n`` episodes to classes."""
    keys = [k for k in PITCH_TYPES if k in distribution]
    raw = np.array([distribution[k] * n for k in keys])
    counts = np.floor(raw).astype(int)
    order = sorted(range(len(keys)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[: n - counts.sum()]:
        counts[i] += 1
    return dict(zip(keys, counts.tolist()))


def episode_seed(root_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1, np.uint64)[0])


def generate_dataset(cfg: SynthConfig) -> tuple[list[SynthEpisode], dict]:
    rng = np.random.default_rng(cfg.seed)
    counts = allocate_counts(cfg.n_episodes, cfg.class_distribution)
    labels = np.array([k for k, c in counts.items() for _ in range(c)], dtype=object)
    rng.shuffle(labels)
    n_rhp = int(round(cfg.handedness_ratio * cfg.n_episodes))
    hands = np.array([Handedness.RHP] * n_rhp + [Handedness.LHP] * (cfg.n_episodes - n_rhp),
                     dtype=object)
    rng.shuffle(hands)
    episodes = [
        generate_episode(str(labels[i]), hands[i], cfg, episode_seed(cfg.seed, i),
                         episode_id=f"synth-{cfg.seed}-{i:06d}")
        for i in range(cfg.n_episodes)
    ]
    manifest = {
        "version": 1,
        "seed": cfg.seed,
        "config": synth_config_dict(cfg),
        "class_counts": counts,
        "episodes": [e.manifest_entry() for e in episodes],
    }
    return episodes, manifest


def synth_config_dict(cfg: SynthConfig) -> dict:
    d = asdict(cfg)
    d["duration"] = list(cfg.duration)
    d["twin_classes"] = list(cfg.twin_classes) if cfg.twin_classes else None
    return d


def write_dataset(episodes: list[SynthEpisode], manifest: dict, pose_path, truth_path) -> None:
    write_jsonl(pose_path, (e.sequence for e in episodes))
    with open(truth_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
