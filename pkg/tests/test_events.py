import numpy as np
import pytest

from pitchkin.events import (EventConfig, EventDetectionError, EventSet, detect_events,
                             detect_foot_plant, detect_mer, detect_release, detection_record,
                             elbow_flexion_raw, infer_handedness)
from pitchkin.pose import Handedness, JointId, PoseSequence
from pitchkin.synth import SynthConfig, generate_episode


def _episode(label="SL", hand=Handedness.RHP, noise=0.0, seed=3):
    return generate_episode(label, hand, SynthConfig(noise_std=noise), seed, "t")


def test_release_first_minimum_after_gate():
    s = np.concatenate([np.linspace(10, 100, 20), np.linspace(100, 20, 10), [15, 12, 14, 16, 40]])
    # last frame above 80 deg then first local minimum under 30 deg
    assert detect_release(s) == 31


def test_release_ignores_minima_before_gate():
    s = np.array([50, 20, 50, 90, 60, 25, 10, 12, 13], dtype=float)
    assert detect_release(s) == 6


def test_release_fallback_without_minimum():
    # monotone descent never forms a minimum; first frame below the threshold is used
    s = np.array([90, 85, 60, 40, 29, 20, 10], dtype=float)
    assert detect_release(s) == 4


def test_release_failures():
    with pytest.raises(EventDetectionError) as exc:
        detect_release(np.full(30, 50.0))
    assert exc.value.reason == "release_gate"
    with pytest.raises(EventDetectionError) as exc:
        detect_release(np.array([10, 90, 60, 50, 45, 50], dtype=float))
    assert exc.value.reason == "release_low"
    assert exc.value.diagnostics["gate_frame"] == 1


def test_mer_is_first_max_between():
    s = np.array([0, 9, 1, 5, 7, 7, 3, 0], dtype=float)
    assert detect_mer(s, 2, 7) == 4
    assert detect_mer(s, 0, 7) == 1


def test_event_set_ordering():
    EventSet(3, 3, 3)
    with pytest.raises(ValueError):
        EventSet(5, 4, 6)


@pytest.mark.parametrize("hand", [Handedness.RHP, Handedness.LHP])
def test_noise_free_events_exact(hand):
    for seed in range(5):
        ep = _episode(hand=hand, seed=seed)
        report, ev = detect_events(ep.sequence)
        assert report.handedness is hand and report.methods_agree
        assert ev == ep.truth_events


def test_handedness_follows_mirroring():
    ep = _episode()
    a = infer_handedness(ep.sequence)
    b = infer_handedness(ep.sequence.mirrored())
    assert a.handedness is Handedness.RHP and b.handedness is Handedness.LHP
    assert b.delta_ankle == pytest.approx(-a.delta_ankle)


def _standing(T=120, hip_dx=1.0):
    j = np.zeros((T, 17, 3))
    j[:, JointId.LEFT_HIP] = [hip_dx, 0, 3]
    j[:, JointId.RIGHT_HIP] = [0, 0, 3]
    return PoseSequence("tie", 30.0, j)


def test_handedness_tie_break():
    # both ankles level -> delta is exactly zero
    r = infer_handedness(_standing())
    assert r.delta_ankle == 0.0 and r.handedness is Handedness.RHP and not r.methods_agree
    j = _standing().joints.copy()
    j[:, JointId.LEFT_HIP] = [0, 1, 3]  # pelvis heading +90 deg: inside the LHP band
    r = infer_handedness(PoseSequence("tie", 30.0, j))
    assert r.handedness is Handedness.LHP and r.methods_agree


def test_foot_plant_failure_diagnostics():
    ep = _episode()
    cfg = EventConfig(ankle_height_ft=-5.0)
    with pytest.raises(EventDetectionError) as exc:
        detect_foot_plant(ep.sequence, Handedness.RHP, cfg)
    assert exc.value.reason == "foot_plant"
    assert {"max_knee_frame", "min_ankle_height"} <= set(exc.value.diagnostics)


def test_elbow_signal_bounds():
    ep = _episode()
    s = elbow_flexion_raw(ep.sequence, Handedness.RHP)
    assert np.all((s >= 0) & (s <= 180))


def test_detection_record_shape():
    ep = _episode()
    report, ev = detect_events(ep.sequence)
    rec = detection_record("t", report, ev)
    assert rec["status"] == "ok" and (rec["fp"], rec["mer"], rec["rel"]) == ev.as_tuple()
    bad = detection_record("t", None, None, "too_short", "50 frames")
    assert bad["status"] == "failed" and bad["failure_reason"] == "too_short"
