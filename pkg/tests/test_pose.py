import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pitchkin.pose import (JOINT_NAMES, GeometryError, Handedness, IngestError, JointId,
                           PoseSequence, heading_xy, interior_angle, read_jsonl, schema_table,
                           wrap_degrees, write_jsonl)


def law_of_cosines_angle(a, b, c):
    """Oracle: angle at b from the three pairwise distances."""
    ab = np.linalg.norm(np.subtract(a, b))
    cb = np.linalg.norm(np.subtract(c, b))
    ac = np.linalg.norm(np.subtract(a, c))
    cos = (ab**2 + cb**2 - ac**2) / (2 * ab * cb)
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def test_joint_table():
    assert len(JointId) == 17
    assert sorted(int(j) for j in JointId) == list(range(17))
    for j in JointId:
        assert JointId.parse(j.label) is j
    assert JointId.LEFT_KNEE.mirror() is JointId.RIGHT_KNEE
    assert JointId.PELVIS.mirror() is JointId.PELVIS
    assert [row["name"] for row in schema_table()] == list(JOINT_NAMES)
    with pytest.raises(ValueError):
        JointId.parse("tail")


def test_handedness_sides():
    r, l = Handedness.RHP, Handedness.LHP
    assert (r.lead_side, r.throwing_side) == ("left", "right")
    assert (l.lead_side, l.throwing_side) == ("right", "left")
    assert r.lead_side != r.throwing_side and l.lead_side != l.throwing_side
    assert r.joint(r.lead_side, "knee") is JointId.LEFT_KNEE


@pytest.mark.parametrize("a, b, c, expected", [
    ((0, 0, 1), (0, 0, 0), (1, 0, 0), 90.0),
    ((0, 0, 2), (0, 0, 1), (0, 0, 0), 180.0),
    ((1, 0, 0), (0, 0, 0), (2, 0, 0), 0.0),
])
def test_interior_angle_examples(a, b, c, expected):
    assert interior_angle(a, b, c) == pytest.approx(expected, abs=1e-12)


def test_interior_angle_matches_law_of_cosines():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(1000, 3, 3))
    for a, b, c in pts:
        assert abs(interior_angle(a, b, c) - law_of_cosines_angle(a, b, c)) < 1e-9


def test_interior_angle_degenerate():
    with pytest.raises(GeometryError, match="vertex"):
        interior_angle((1, 1, 1), (1, 1, 1), (0, 0, 0))


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).map(np.array)


@given(vec, vec, vec, st.floats(0.1, 10), st.floats(-np.pi, np.pi))
def test_interior_angle_symmetry_scale_rotation(a, b, c, k, theta):
    if np.linalg.norm(a - b) < 1e-3 or np.linalg.norm(c - b) < 1e-3:
        return
    base = interior_angle(a, b, c)
    assert interior_angle(c, b, a) == pytest.approx(base, abs=1e-9)
    assert interior_angle(b + k * (a - b), b, b + k * (c - b)) == pytest.approx(base, abs=1e-6)
    R = np.array([[np.cos(theta), -np.sin(theta), 0], [np.sin(theta), np.cos(theta), 0], [0, 0, 1]])
    assert interior_angle(R @ a, R @ b, R @ c) == pytest.approx(base, abs=1e-6)


@pytest.mark.parametrize("v, expected", [((1, 0, 5), 0.0), ((0, 1, 0), 90.0), ((-1, -1, 0), -135.0)])
def test_heading_examples(v, expected):
    assert heading_xy(v) == pytest.approx(expected)


def test_heading_zero_projection():
    with pytest.raises(GeometryError):
        heading_xy((0, 0, 3))


@given(vec)
def test_heading_of_negated_vector(v):
    if np.hypot(v[0], v[1]) < 1e-6:
        return
    diff = heading_xy(-v) - heading_xy(v) - 180.0
    assert min(abs(diff % 360.0), abs(360.0 - diff % 360.0)) < 1e-9


def test_wrap_degrees():
    assert wrap_degrees(-180.0) == 180.0
    assert wrap_degrees(190.0) == pytest.approx(-170.0)
    np.testing.assert_allclose(wrap_degrees(np.array([360.0, -350.0])), [0.0, 10.0])


def _seq(T=120, eid="e1", label="FF"):
    rng = np.random.default_rng(0)
    return PoseSequence(eid, 30.0, rng.normal(size=(T, 17, 3)), label)


def test_sequence_validation():
    with pytest.raises(IngestError) as exc:
        _seq(T=50)
    assert exc.value.reason == "too_short"
    arr = np.zeros((120, 17, 3))
    arr[3, 4, 1] = np.nan
    with pytest.raises(IngestError) as exc:
        PoseSequence("x", 30.0, arr)
    assert exc.value.reason == "non_finite"
    with pytest.raises(IngestError):
        PoseSequence("x", 30.0, np.zeros((120, 16, 3)))
    with pytest.raises(IngestError):
        PoseSequence("x", 30.0, np.zeros((120, 17, 3)), label="XX")


def test_sequence_is_immutable():
    s = _seq()
    with pytest.raises(ValueError):
        s.joints[0, 0, 0] = 1.0


def test_mirror_is_involution():
    s = _seq()
    np.testing.assert_array_equal(s.mirrored().mirrored().joints, s.joints)
    m = s.mirrored()
    np.testing.assert_array_equal(m.track(JointId.LEFT_HIP)[:, 0], -s.track(JointId.RIGHT_HIP)[:, 0])


def test_jsonl_round_trip(tmp_path):
    seqs = [_seq(eid="a"), _seq(T=130, eid="b", label=None)]
    path = tmp_path / "poses.jsonl"
    write_jsonl(path, seqs)
    back = read_jsonl(path)
    assert [s.episode_id for s in back] == ["a", "b"]
    assert back[1].label is None
    np.testing.assert_array_equal(back[0].joints, seqs[0].joints)
    rec = json.loads(path.read_text().splitlines()[0])
    assert rec["version"] == 1 and len(rec["frames"][0]) == 17


def test_jsonl_reports_line_and_episode(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = _seq(eid="ok").to_record()
    short = _seq(eid="tiny").to_record()
    short["frames"] = short["frames"][:50]
    path.write_text(json.dumps(good) + "\n" + json.dumps(short) + "\n")
    with pytest.raises(IngestError, match=r":2 episode tiny") as exc:
        read_jsonl(path)
    assert exc.value.reason == "too_short"
