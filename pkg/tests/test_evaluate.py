import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pitchkin.evaluate import (METRIC_JOINTS, REGIONS, EvaluationError, SplitSpec,
                               aggregate_importance, classification_metrics, confusion_matrix,
                               evaluation_report, group_accuracy, render_text, stratified_split,
                               top_features)
from pitchkin.features import FEATURE_NAMES
from pitchkin.pose import JOINT_NAMES

CLASSES = ["FF", "FT", "SL", "CH"]


def brute_force(y_true, y_pred, classes):
    """Counting oracle written with plain loops."""
    k = len(classes)
    cm = [[0] * k for _ in range(k)]
    for t, p in zip(y_true, y_pred):
        cm[classes.index(t)][classes.index(p)] += 1
    out = {}
    for i, c in enumerate(classes):
        tp = cm[i][i]
        pred = sum(cm[r][i] for r in range(k))
        sup = sum(cm[i])
        prec = tp / pred if pred else 0.0
        rec = tp / sup if sup else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[c] = (prec, rec, f1, sup)
    acc = sum(cm[i][i] for i in range(k)) / len(y_true)
    return cm, out, acc


def test_metrics_match_oracle_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 60))
        yt = list(rng.choice(CLASSES, size=n))
        yp = list(rng.choice(CLASSES, size=n))
        cm, per, acc = brute_force(yt, yp, CLASSES)
        m = classification_metrics(yt, yp, CLASSES)
        norm, counts = confusion_matrix(yt, yp, CLASSES)
        assert counts.tolist() == cm
        assert m["accuracy"] == acc and m["n"] == n
        for c in CLASSES:
            got = m["per_class"][c]
            assert (got["precision"], got["recall"], got["f1"], got["support"]) == pytest.approx(per[c])
        rows = norm[~np.isnan(norm).any(axis=1)]
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-9)


def test_confusion_zero_support_row_is_nan():
    norm, counts = confusion_matrix(["FF", "FF"], ["FF", "FT"], CLASSES)
    assert np.isnan(norm[1]).all() and counts[1].sum() == 0
    report = evaluation_report(["FF", "FF"], ["FF", "FT"], CLASSES)
    assert report["confusion"]["row_normalized"][1] == "n/a"
    assert "n/a" in render_text(report)


def test_unknown_class_rejected():
    with pytest.raises(EvaluationError):
        classification_metrics(["FF"], ["XX"], CLASSES)


def test_group_accuracy():
    g = group_accuracy(["a", "a", "b", "b"], ["a", "b", "b", "b"], ["RHP", "RHP", "LHP", "RHP"])
    assert g == {"LHP": {"count": 1, "accuracy": 1.0}, "RHP": {"count": 3, "accuracy": 2 / 3}}


@given(st.integers(2, 30), st.integers(2, 30), st.integers(0, 10**6))
def test_stratified_split_preserves_classes(na, nb, seed):
    labels = ["a"] * na + ["b"] * nb
    tr, te = stratified_split(labels, SplitSpec(seed=seed))
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(na + nb))
    for c, n in (("a", na), ("b", nb)):
        n_tr = sum(labels[i] == c for i in tr)
        assert 1 <= n_tr <= n - 1
        assert abs(n_tr - 0.8 * n) <= 1


def test_split_deterministic_and_errors():
    labels = ["a"] * 10 + ["b"] * 7
    a = stratified_split(labels, SplitSpec(seed=3))
    b = stratified_split(labels, SplitSpec(seed=3))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(EvaluationError):
        stratified_split(labels + ["c"])


def test_aggregations_sum_to_one_random():
    rng = np.random.default_rng(1)
    for _ in range(50):
        imp = rng.dirichlet(np.full(len(FEATURE_NAMES), 0.3))
        agg = aggregate_importance(imp, FEATURE_NAMES)
        for view in ("category", "joint", "region", "event", "upper_vs_lower"):
            assert sum(agg[view].values()) == pytest.approx(1.0, abs=1e-9)


def test_uniform_importance_category_shares():
    n = len(FEATURE_NAMES)
    agg = aggregate_importance(np.full(n, 1 / n), FEATURE_NAMES)
    assert agg["category"]["pose"] == pytest.approx(153 / 229)
    assert agg["category"]["biomech"] == pytest.approx(45 / 229)
    assert agg["category"]["delta"] == pytest.approx(30 / 229)
    assert agg["category"]["handedness"] == pytest.approx(1 / 229)
    # pose and biomech split evenly over events, deltas half to each neighbor
    ev = agg["event"]
    assert ev["FP"] == pytest.approx(ev["REL"]) and ev["MER"] > ev["FP"]


def test_single_feature_attribution():
    names = list(FEATURE_NAMES)
    imp = np.zeros(len(names))
    imp[names.index("pose.REL.right_wrist.z")] = 1.0
    agg = aggregate_importance(imp, names)
    assert agg["joint"]["right_wrist"] == 1.0 and agg["region"]["arms"] == 1.0
    assert agg["event"]["REL"] == 1.0 and agg["upper_vs_lower"]["upper"] == 1.0
    imp[:] = 0.0
    imp[names.index("delta.FP_MER.lead_knee_flexion")] = 1.0
    agg = aggregate_importance(imp, names)
    assert agg["event"] == {"FP": 0.5, "MER": 0.5, "REL": 0.0}
    assert agg["joint"]["left_knee"] == agg["joint"]["right_knee"] == 0.5


def test_attribution_tables_cover_every_joint():
    assert sorted(j for r in REGIONS.values() for j in r) == sorted(JOINT_NAMES)
    assert all(set(js) <= set(JOINT_NAMES) for js in METRIC_JOINTS.values())


def test_aggregation_errors():
    with pytest.raises(EvaluationError):
        aggregate_importance([1.0], ["mystery.feature"])
    with pytest.raises(EvaluationError):
        aggregate_importance([0.5, 0.2], ["pose.FP.nose.x", "pose.FP.nose.y"])


def test_top_features_order():
    assert top_features([0.1, 0.5, 0.4], ["a", "b", "c"], 2) == [("b", 0.5), ("c", 0.4)]
