"""Splits, classification metrics, confusion analysis and importance aggregation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .pose import JOINT_NAMES


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0


def stratified_split(labels: Sequence, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels, dtype=object)
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(labels.size)
        cut = int(np.floor(spec.train_fraction * labels.size + 0.5))
        return np.sort(perm[:cut]), np.sort(perm[cut:])
    train, test = [], []
    for c in sorted(set(labels.tolist()), key=str):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise EvaluationError(f"class {c!r} has {idx.size} sample(s); need >= 2 to split")
        idx = rng.permutation(idx)
        cut = int(np.floor(spec.train_fraction * idx.size + 0.5))
        cut = min(max(cut, 1), idx.size - 1)
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _indices(y, classes) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([lookup[v] for v in y], dtype=int)
    except KeyError as exc:
        raise EvaluationError(f"unknown class code {exc.args[0]!r}") from None


def confusion_counts(y_true, y_pred, classes) -> np.ndarray:
    if len(y_true) != len(y_pred):
        raise EvaluationError("label vectors differ in length")
    t = _indices(y_true, classes)
    p = _indices(y_pred, classes)
    k = len(classes)
    return np.bincount(t * k + p, minlength=k * k).reshape(k, k)


def confusion_matrix(y_true, y_pred, classes, normalize: Optional[str] = "row"):
    """Row-normalized matrix (NaN rows for zero support) and the raw counts."""
    counts = confusion_counts(y_true, y_pred, classes)
    if normalize is None:
        return counts.astype(float), counts
    if normalize != "row":
        raise EvaluationError(f"unsupported normalization {normalize!r}")
    support = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = np.where(support > 0, counts / np.maximum(support, 1), np.nan)
    return norm, counts


def classification_metrics(y_true, y_pred, classes) -> dict:
    counts = confusion_counts(y_true, y_pred, classes)
    tp = np.diag(counts).astype(float)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    n = counts.sum()
    per_class = {
        c: {"precision": float(precision[i]), "recall": float(recall[i]),
            "f1": float(f1[i]), "support": int(support[i])}
        for i, c in enumerate(classes)
    }
    return {
        "accuracy": float(tp.sum() / n) if n else float("nan"),
        "per_class": per_class,
        "macro": {"precision": float(precision.mean()), "recall": float(recall.mean()),
                  "f1": float(f1.mean())},
        "n": int(n),
    }


def group_accuracy(y_true, y_pred, groups) -> dict:
    y_true = np.asarray(y_true, dtype=object)
    y_pred = np.asarray(y_pred, dtype=object)
    groups = np.asarray(groups, dtype=object)
    out = {}
    for g in sorted(set(groups.tolist()), key=str):
        m = groups == g
        out[g] = {"count": int(m.sum()), "accuracy": float(np.mean(y_true[m] == y_pred[m]))}
    return out


# -- importance aggregation -------------------------------------------------

JOINT_TOKENS = tuple(JOINT_NAMES)

# Biomechanical metric -> joints credited with its importance, split evenly.
# "throwing"/"lead"/... are resolved per model as both sides since the
# feature layout is handedness-relative.
METRIC_JOINTS = {
    "lead_knee_flexion": ("left_knee", "right_knee"),
    "trail_knee_flexion": ("left_knee", "right_knee"),
    "throwing_elbow_flexion": ("left_elbow", "right_elbow"),
    "glove_elbow_flexion": ("left_elbow", "right_elbow"),
    "trunk_forward_tilt": ("neck", "pelvis"),
    "trunk_lateral_tilt": ("neck", "pelvis"),
    "trunk_rotation": ("neck", "pelvis"),
    "pelvis_rotation": ("left_hip", "right_hip"),
    "hip_shoulder_separation": ("left_shoulder", "right_shoulder", "left_hip", "right_hip"),
    "throwing_shoulder_abduction": ("left_shoulder", "right_shoulder"),
    "lead_shin_angle": ("left_ankle", "right_ankle", "left_knee", "right_knee"),
    "trail_shin_angle": ("left_ankle", "right_ankle", "left_knee", "right_knee"),
    "cog_x": ("pelvis",),
    "cog_y": ("pelvis",),
    "cog_z": ("pelvis",),
}

REGIONS = {
    "arms": ("left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
             "left_wrist", "right_wrist"),
    "head": ("nose", "left_eye", "right_eye"),
    "trunk": ("neck", "pelvis"),
    "lower_body": ("left_hip", "right_hip", "left_knee", "right_knee",
                   "left_ankle", "right_ankle"),
}
UPPER_REGIONS = ("arms", "head", "trunk")
CATEGORY_PREFIX = {"pose": "pose.", "biomech": "bio.", "delta": "delta.", "handedness": "meta."}


def _joint_shares(name: str, metric_joints: Mapping[str, Sequence[str]]) -> dict:
    parts = name.split(".")
    if parts[0] == "pose":
        if len(parts) != 4 or parts[2] not in JOINT_TOKENS:
            raise EvaluationError(f"unmapped feature name {name!r}")
        return {parts[2]: 1.0}
    if parts[0] in ("bio", "delta"):
        joints = metric_joints.get(parts[-1])
        if not joints:
            raise EvaluationError(f"unmapped feature name {name!r}")
        return {j: 1.0 / len(joints) for j in joints}
    if name == "meta.h_rhp":
        return {}
    raise EvaluationError(f"unmapped feature name {name!r}")


def _event_shares(name: str) -> dict:
    parts = name.split(".")
    if parts[0] in ("pose", "bio"):
        return {parts[1]: 1.0}
    if parts[0] == "delta":
        a, b = parts[1].split("_")
        return {a: 0.5, b: 0.5}
    return {}


def _renormalize(table: dict) -> dict:
    total = sum(table.values())
    if total <= 0:
        return {k: 0.0 for k in table}
    return {k: v / total for k, v in table.items()}


def aggregate_importance(importance, names: Sequence[str],
                         metric_joints: Mapping[str, Sequence[str]] = METRIC_JOINTS) -> dict:
    """Category, joint, region and event views of a normalized importance vector.

    Handedness carries no joint or event, so the joint, region and event
    views are renormalized over the remaining mass.
    """
    imp = np.asarray(importance, dtype=float)
    if imp.shape != (len(names),):
        raise EvaluationError("importance and names differ in length")
    if np.any(imp < 0) or abs(imp.sum() - 1.0) > 1e-9:
        raise EvaluationError("importances must be nonnegative and sum to 1")

    category = {k: 0.0 for k in CATEGORY_PREFIX}
    joint = {j: 0.0 for j in JOINT_TOKENS}
    event = {"FP": 0.0, "MER": 0.0, "REL": 0.0}
    for v, name in zip(imp, names):
        for cat, prefix in CATEGORY_PREFIX.items():
            if name.startswith(prefix):
                category[cat] += v
                break
        else:
            raise EvaluationError(f"unmapped feature name {name!r}")
        for j, share in _joint_shares(name, metric_joints).items():
            joint[j] += v * share
        for e, share in _event_shares(name).items():
            if e not in event:
                raise EvaluationError(f"unmapped event token in {name!r}")
            event[e] += v * share
    joint = _renormalize(joint)
    region = {r: sum(joint[j] for j in members) for r, members in REGIONS.items()}
    upper = sum(region[r] for r in UPPER_REGIONS)
    return {
        "category": category,
        "joint": joint,
        "region": region,
        "upper_vs_lower": {"upper": upper, "lower": region["lower_body"]},
        "event": _renormalize(event),
    }


def top_features(importance, names: Sequence[str], k: int = 10) -> list[tuple[str, float]]:
    imp = np.asarray(importance, dtype=float)
    order = np.argsort(-imp, kind="stable")[:k]
    return [(names[i], float(imp[i])) for i in order]


def evaluation_report(y_true, y_pred, classes, groups=None, importance=None,
                      names=None, provenance: Optional[dict] = None,
                      metric_joints: Mapping[str, Sequence[str]] = METRIC_JOINTS) -> dict:
    metrics = classification_metrics(y_true, y_pred, classes)
    norm, counts = confusion_matrix(y_true, y_pred, classes)
    rows = []
    for i, c in enumerate(classes):
        if counts[i].sum() == 0:
            rows.append("n/a")
        else:
            rows.append([float(v) for v in norm[i]])
    report = {
        "version": 1,
        "overall_accuracy": metrics["accuracy"],
        "n_test": metrics["n"],
        "per_class": metrics["per_class"],
        "macro": metrics["macro"],
        "classes": list(classes),
        "confusion": {"row_normalized": rows, "counts": counts.tolist()},
    }
    if groups is not None:
        report["accuracy_by_group"] = group_accuracy(y_true, y_pred, groups)
    if importance is not None:
        report["importance"] = aggregate_importance(importance, names, metric_joints)
        report["top_features"] = top_features(importance, names)
    if provenance:
        report["provenance"] = provenance
    return report


def render_text(report: dict) -> str:
    """Aligned plain-text tables for a report produced by :func:`evaluation_report`."""
    lines = [f"Overall accuracy: {100 * report['overall_accuracy']:.1f}%  (n={report['n_test']})", ""]
    lines.append(f"{'Pitch':<6}{'Prec.':>8}{'Rec.':>8}{'F1':>8}{'Support':>9}")
    for c, m in report["per_class"].items():
        lines.append(f"{c:<6}{100 * m['precision']:>7.1f}%{100 * m['recall']:>7.1f}%"
                     f"{100 * m['f1']:>7.1f}%{m['support']:>9d}")
    mac = report["macro"]
    lines.append(f"{'Avg':<6}{100 * mac['precision']:>7.1f}%{100 * mac['recall']:>7.1f}%"
                 f"{100 * mac['f1']:>7.1f}%{report['n_test']:>9d}")
    lines.append("")
    classes = report["classes"]
    lines.append("Confusion (row-normalized, %)")
    lines.append("      " + "".join(f"{c:>7}" for c in classes))
    for c, row in zip(classes, report["confusion"]["row_normalized"]):
        cells = "".join(f"{100 * v:>7.1f}" for v in row) if row != "n/a" else "    n/a"
        lines.append(f"{c:<6}{cells}")
    if "accuracy_by_group" in report:
        lines.append("")
        lines.append(f"{'Group':<8}{'Count':>8}{'Accuracy':>10}")
        for g, v in report["accuracy_by_group"].items():
            lines.append(f"{g:<8}{v['count']:>8d}{100 * v['accuracy']:>9.1f}%")
    if "importance" in report:
        for view in ("category", "region", "upper_vs_lower", "event", "joint"):
            lines.append("")
            lines.append(f"Importance by {view.replace('_', ' ')}")
            for k, v in sorted(report["importance"][view].items(), key=lambda kv: -kv[1]):
                lines.append(f"  {k:<16}{100 * v:>7.1f}%")
        lines.append("")
        lines.append("Top features")
        for rank, (name, v) in enumerate(report["top_features"], 1):
            lines.append(f"  {rank:>2}. {name:<40}{100 * v:>6.2f}%")
    return "\n".join(lines) + "\n"
