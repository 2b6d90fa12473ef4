import json

import pytest

from pitchkin import gbdt
from pitchkin.cli import main
from pitchkin.config import PipelineConfig, load_config, save_config
from pitchkin.events import EventConfig
from pitchkin.features import read_feature_meta
from pitchkin.pose import read_jsonl


def test_config_load_save_idempotent(tmp_path):
    cfg = PipelineConfig(seed=5, events=EventConfig(ankle_height_ft=0.9), workers=2)
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    save_config(cfg, a)
    save_config(load_config(a), b)
    assert a.read_bytes() == b.read_bytes()
    assert load_config(a) == cfg and load_config(a).hash() == cfg.hash()
    assert load_config(a).train.seed == 5 and load_config(a).split.seed == 5


def test_config_defaults_and_hash():
    cfg = PipelineConfig()
    d = cfg.to_dict()
    assert d["version"] == 1 and d["train"]["rounds"] == 300 and d["train"]["max_depth"] == 12
    assert d["events"]["release_gate_deg"] == 80.0 and d["split"]["train_fraction"] == 0.8
    assert PipelineConfig(seed=1).hash() != cfg.hash()
    with pytest.raises(ValueError):
        PipelineConfig(metrics=("nonsense",))
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"version": 99})


def test_schema(capsys):
    assert main(["schema"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["version"] == 1 and len(doc["joints"]) == 17


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "120", "--seed", "3", "--out", str(d / "p.jsonl"),
                 "--truth", str(d / "t.json")]) == 0
    cfg = PipelineConfig(train=gbdt.TrainConfig(rounds=20))
    save_config(cfg, d / "cfg.json")
    assert main(["pipeline", "--poses", str(d / "p.jsonl"), "--out-dir", str(d / "run"),
                 "--config", str(d / "cfg.json")]) == 0
    return d


def test_pipeline_outputs(run_dir):
    run = run_dir / "run"
    cfg_hash = load_config(run / "config.json").hash()
    report = json.loads((run / "report.json").read_text())
    assert report["version"] == 1 and report["provenance"] == {"config_hash": cfg_hash, "seed": 0}
    assert 0 <= report["overall_accuracy"] <= 1
    assert read_feature_meta(run / "features.csv")["config_hash"] == cfg_hash
    header = (run / "features.csv").read_text().splitlines()[1].split(",")
    assert len(header) == 231
    assert json.loads((run / "model.json").read_text())["provenance"]["config_hash"] == cfg_hash
    assert json.loads((run / "split.json").read_text())["seed"] == 0
    lines = (run / "detect.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["config_hash"] == cfg_hash and len(lines) == 121
    assert (run / "report.txt").read_text().startswith("Overall accuracy")


def test_pipeline_is_deterministic(run_dir):
    assert main(["pipeline", "--poses", str(run_dir / "p.jsonl"), "--out-dir", str(run_dir / "again"),
                 "--config", str(run_dir / "cfg.json")]) == 0
    for name in ("features.csv", "model.json", "report.json", "detect.jsonl", "split.json"):
        assert (run_dir / "run" / name).read_bytes() == (run_dir / "again" / name).read_bytes()


def test_stagewise_commands_match_pipeline(run_dir, tmp_path):
    p = str(run_dir / "p.jsonl")
    f, s, m = str(tmp_path / "f.csv"), str(tmp_path / "s.json"), str(tmp_path / "m.json")
    c = ["--config", str(run_dir / "cfg.json")]
    assert main(["extract", "--poses", p, "--out", f, *c]) == 0
    assert main(["split", "--features", f, "--out", s, *c]) == 0
    assert main(["train", "--features", f, "--split", s, "--model", m, *c]) == 0
    assert main(["eval", "--features", f, "--split", s, "--model", m,
                 "--out", str(tmp_path / "r.json"), *c]) == 0
    assert (tmp_path / "f.csv").read_bytes() == (run_dir / "run" / "features.csv").read_bytes()
    assert (tmp_path / "m.json").read_bytes() == (run_dir / "run" / "model.json").read_bytes()
    assert (tmp_path / "r.json").read_bytes() == (run_dir / "run" / "report.json").read_bytes()
    assert main(["importance", "--model", m, "--out", str(tmp_path / "i.json")]) == 0
    agg = json.loads((tmp_path / "i.json").read_text())["aggregations"]
    assert sum(agg["category"].values()) == pytest.approx(1.0)


def test_uniform_extract_and_pose_only_training(run_dir, tmp_path):
    p = str(run_dir / "p.jsonl")
    f = tmp_path / "u.csv"
    assert main(["extract", "--poses", p, "--out", str(f), "--sampling", "uniform", "--k", "3"]) == 0
    assert len(f.read_text().splitlines()[1].split(",")) == 156
    m = tmp_path / "m.json"
    assert main(["train", "--features", str(f), "--model", str(m), "--columns", "pose",
                 "--rounds", "5"]) == 0
    assert gbdt.load_model(m).n_features == 154


def test_detect_skips_short_episode(run_dir, tmp_path, capsys):
    seqs = read_jsonl(run_dir / "p.jsonl")[:3]
    recs = [s.to_record() for s in seqs]
    recs[1]["frames"] = recs[1]["frames"][:50]
    src = tmp_path / "mixed.jsonl"
    src.write_text("".join(json.dumps(r) + "\n" for r in recs) + "{not json\n")
    out = tmp_path / "d.jsonl"
    assert main(["detect", "--poses", str(src), "--out", str(out)]) == 0
    rows = [json.loads(x) for x in out.read_text().splitlines()[1:]]
    assert [r["status"] for r in rows] == ["ok", "failed", "ok", "failed"]
    assert rows[1]["failure_reason"] == "too_short" and rows[1]["episode_id"] == seqs[1].episode_id
    assert rows[3]["failure_reason"] == "bad_json"
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["skipped"] == 2 and err["reasons"]["too_short"] == 1


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["detect", "--poses", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "x")]) != 0
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["error"] == "FileNotFoundError"
    bad = tmp_path / "bad.csv"
    bad.write_text("episode_id,label,a\n")
    assert main(["split", "--features", str(bad), "--out", str(tmp_path / "s.json")]) != 0
    assert "version" in json.loads(capsys.readouterr().err.strip())["message"]
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_seed_override_changes_provenance(run_dir, tmp_path):
    f = tmp_path / "f.csv"
    assert main(["extract", "--poses", str(run_dir / "p.jsonl"), "--out", str(f), "--seed", "9"]) == 0
    assert read_feature_meta(f)["seed"] == "9"
    assert read_feature_meta(f)["version"] == "1"
