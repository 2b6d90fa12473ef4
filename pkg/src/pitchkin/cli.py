"""Command-line entry point: ``pitchkin <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gbdt
from .config import PipelineConfig, load_config, save_config
from .evaluate import (EvaluationError, aggregate_importance, evaluation_report, render_text,
                       stratified_split, top_features)
from .events import detection_record
from .features import (CONFIGURATIONS, HANDEDNESS_NAME, FeatureError, read_feature_csv,
                       read_feature_meta, select_columns, write_feature_csv)
from .pipeline import build_table, process_all
from .pose import IngestError, PITCH_TYPES, iter_episodes, schema_table
from .synth import DEFAULT_CLASS_DISTRIBUTION, SynthConfig, generate_dataset, write_dataset

log = logging.getLogger("pitchkin")

DETECT_VERSION = 1
SPLIT_VERSION = 1


class CliError(Exception):
    def __init__(self, kind: str, message: str, **extra):
        super().__init__(message)
        self.kind = kind
        self.extra = extra


def _diag(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=False)
        fh.write("\n")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError("bad_json", f"{path}: {exc}") from None


def _config(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, workers=args.workers)
    return cfg


# stages -------------------------------------------------------------------

def run_detect(poses, out, cfg: PipelineConfig, features_out=None, sampling="events", k=3) -> Counter:
    """Detect events per episode; optionally also write the feature CSV."""
    seqs, bad = [], []
    for lineno, seq, err in iter_episodes(poses):
        if err is None:
            seqs.append((lineno, seq))
        else:
            bad.append((lineno, err))
    results = process_all([s for _, s in seqs], cfg.events, cfg.metrics, sampling, k, cfg.workers)

    rows = [(lineno, detection_record(r.episode_id, r.report, r.events, r.failure, r.detail))
            for (lineno, _), r in zip(seqs, results)]
    for lineno, err in bad:
        rows.append((lineno, detection_record(err.episode_id or f"line:{lineno}", None, None,
                                              err.reason, str(err))))
    rows.sort(key=lambda x: x[0])
    tally = Counter(rec.get("failure_reason", "ok") for _, rec in rows)
    if out is not None:
        with open(out, "w") as fh:
            head = {"version": DETECT_VERSION, **cfg.provenance()}
            fh.write(json.dumps(head) + "\n")
            for _, rec in rows:
                fh.write(json.dumps(rec) + "\n")
    if features_out is not None:
        table = build_table(results, cfg.metrics, sampling, k)
        write_feature_csv(features_out, table.names,
                          zip(table.episode_ids, table.labels, table.X), meta=cfg.provenance())
    skipped = {k_: v for k_, v in tally.items() if k_ != "ok"}
    if skipped:
        sys.stderr.write(json.dumps({"skipped": sum(skipped.values()), "reasons": skipped,
                                     "total": len(rows)}) + "\n")
    return tally


def run_split(features, out, cfg: PipelineConfig) -> dict:
    _, ids, labels, _ = read_feature_csv(features)
    if any(lab is None for lab in labels):
        raise CliError("unlabeled", f"{features}: split needs a label on every row")
    tr, te = stratified_split(labels, cfg.split)
    doc = {"version": SPLIT_VERSION, **cfg.provenance(),
           "train": [ids[i] for i in tr], "test": [ids[i] for i in te]}
    _write_json(out, doc)
    return doc


def _load_split_rows(features, split, part: str):
    names, ids, labels, X = read_feature_csv(features)
    if split is None:
        rows = np.arange(len(ids))
    else:
        doc = _read_json(split)
        pos = {e: i for i, e in enumerate(ids)}
        missing = [e for e in doc[part] if e not in pos]
        if missing:
            raise CliError("split_mismatch", f"{len(missing)} {part} ids not in {features}",
                           episode_id=missing[0])
        rows = np.array([pos[e] for e in doc[part]], dtype=int)
    return names, [ids[i] for i in rows], [labels[i] for i in rows], X[rows]


def run_train(features, split, model_out, log_out, cfg: PipelineConfig, columns: str) -> gbdt.GbdtModel:
    names, _, labels, X = _load_split_rows(features, split, "train")
    cols = select_columns(names, CONFIGURATIONS[columns])
    classes = [c for c in PITCH_TYPES if c in set(labels)]
    model = gbdt.fit(X[:, cols], labels, cfg.train, classes=classes,
                     feature_names=[names[i] for i in cols])
    doc = gbdt.model_to_dict(model)
    doc["provenance"] = cfg.provenance()
    with open(model_out, "w") as fh:
        json.dump(doc, fh)
    if log_out is not None:
        _write_json(log_out, {"version": 1, **cfg.provenance(), "columns": columns,
                              "n_train": int(len(labels)), "n_features": len(cols),
                              "train_loss": model.train_loss})
    return model


def run_eval(features, split, model_path, out, text_out, cfg: PipelineConfig) -> dict:
    names, _, labels, X = _load_split_rows(features, split, "test")
    model = gbdt.load_model(model_path)
    pos = {n: i for i, n in enumerate(names)}
    missing = [n for n in model.feature_names if n not in pos]
    if missing:
        raise CliError("feature_mismatch", f"model expects feature {missing[0]!r} absent from {features}")
    Xm = X[:, [pos[n] for n in model.feature_names]]
    pred = model.predict(Xm)
    groups = None
    if HANDEDNESS_NAME in pos:
        groups = np.where(X[:, pos[HANDEDNESS_NAME]] > 0.5, "RHP", "LHP")
    imp = gbdt.gain_importance(model)
    try:
        report = evaluation_report(labels, pred, model.classes, groups, imp, model.feature_names,
                                   provenance=cfg.provenance(), metric_joints=cfg.metric_joints)
    except EvaluationError:
        # feature layouts without joint/event tokens get no aggregation views
        report = evaluation_report(labels, pred, model.classes, groups, provenance=cfg.provenance())
    _write_json(out, report)
    if text_out is not None:
        Path(text_out).write_text(render_text(report))
    return report


def run_importance(model_path, out, cfg: PipelineConfig, top: int) -> dict:
    model = gbdt.load_model(model_path)
    imp = gbdt.gain_importance(model)
    doc = {"version": 1, **cfg.provenance(),
           "aggregations": aggregate_importance(imp, model.feature_names, cfg.metric_joints),
           "top_features": top_features(imp, model.feature_names, top)}
    if out is None:
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    else:
        _write_json(out, doc)
    return doc


# argparse handlers --------------------------------------------------------

def cmd_schema(args) -> int:
    sys.stdout.write(json.dumps({"version": 1, "joints": schema_table()}, indent=1) + "\n")
    return 0


def cmd_synth(args) -> int:
    dist = dict(DEFAULT_CLASS_DISTRIBUTION)
    if args.balanced:
        dist = {c: 1.0 / len(PITCH_TYPES) for c in PITCH_TYPES}
    twins = tuple(args.twin.split(",")) if args.twin else None
    scfg = SynthConfig(n_episodes=args.n, class_distribution=dist, noise_std=args.noise,
                       signature_scale=args.signature_scale, twin_classes=twins, seed=args.seed)
    episodes, manifest = generate_dataset(scfg)
    write_dataset(episodes, manifest, args.out, args.truth)
    log.info("wrote %d episodes to %s", len(episodes), args.out)
    return 0


def cmd_detect(args) -> int:
    cfg = _config(args)
    tally = run_detect(args.poses, args.out, cfg)
    log.info("detect: %s", dict(tally))
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    run_detect(args.poses, None, cfg, features_out=args.out, sampling=args.sampling, k=args.k)
    return 0


def cmd_split(args) -> int:
    run_split(args.features, args.out, _config(args))
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    if args.rounds is not None:
        cfg = replace(cfg, train=replace(cfg.train, rounds=args.rounds))
    run_train(args.features, args.split, args.model, args.log, cfg, args.columns)
    return 0


def cmd_eval(args) -> int:
    report = run_eval(args.features, args.split, args.model, args.out, args.text, _config(args))
    log.info("accuracy %.4f on %d episodes", report["overall_accuracy"], report["n_test"])
    return 0


def cmd_importance(args) -> int:
    run_importance(args.model, args.out, _config(args), args.top)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    if args.rounds is not None:
        cfg = replace(cfg, train=replace(cfg.train, rounds=args.rounds))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    run_detect(args.poses, out / "detect.jsonl", cfg, features_out=out / "features.csv")
    run_split(out / "features.csv", out / "split.json", cfg)
    run_train(out / "features.csv", out / "split.json", out / "model.json", out / "train_log.json",
              cfg, args.columns)
    report = run_eval(out / "features.csv", out / "split.json", out / "model.json",
                      out / "report.json", out / "report.txt", cfg)
    log.info("accuracy %.4f on %d held-out episodes", report["overall_accuracy"], report["n_test"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pitchkin", description="Pitch type classification from pose sequences.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="pipeline config JSON (defaults if omitted)")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="override the config root seed")
        return sp

    sp = sub.add_parser("schema", help="print the joint table")
    sp.set_defaults(func=cmd_schema)

    sp = sub.add_parser("synth", help="generate a synthetic pose dataset with ground truth")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--noise", type=float, default=0.02, help="joint noise std, ft")
    sp.add_argument("--signature-scale", type=float, default=1.0)
    sp.add_argument("--twin", default=None, help="two classes sharing one signature, e.g. FF,FT")
    sp.add_argument("--balanced", action="store_true", help="uniform class distribution")
    sp.add_argument("--out", required=True, help="pose JSONL path")
    sp.add_argument("--truth", required=True, help="truth manifest JSON path")
    sp.set_defaults(func=cmd_synth)

    sp = common(sub.add_parser("detect", help="handedness and event frames per episode"))
    sp.add_argument("--poses", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_detect)

    sp = common(sub.add_parser("extract", help="feature CSV from pose JSONL"))
    sp.add_argument("--poses", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--sampling", choices=("events", "uniform"), default="events")
    sp.add_argument("--k", type=int, default=3, help="frames for uniform sampling")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_extract)

    sp = common(sub.add_parser("split", help="stratified train/test split"))
    sp.add_argument("--features", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    sp = common(sub.add_parser("train", help="fit the boosted tree classifier"))
    sp.add_argument("--features", required=True)
    sp.add_argument("--split", default=None, help="train on the split's train ids")
    sp.add_argument("--model", required=True)
    sp.add_argument("--log", default=None, help="training log JSON")
    sp.add_argument("--columns", choices=sorted(CONFIGURATIONS), default="pose+biomech+delta")
    sp.add_argument("--rounds", type=int, default=None)
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("eval", help="evaluate a model on held-out episodes"))
    sp.add_argument("--features", required=True)
    sp.add_argument("--split", default=None, help="evaluate on the split's test ids")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True, help="report JSON")
    sp.add_argument("--text", default=None, help="plain-text report")
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("importance", help="aggregated gain importance of a model"))
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--top", type=int, default=10)
    sp.set_defaults(func=cmd_importance)

    sp = common(sub.add_parser("pipeline", help="detect, extract, split, train and eval"))
    sp.add_argument("--poses", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--columns", choices=sorted(CONFIGURATIONS), default="pose+biomech+delta")
    sp.add_argument("--rounds", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        _diag(exc.kind, str(exc), **exc.extra)
    except IngestError as exc:
        _diag(exc.reason, str(exc), episode_id=exc.episode_id)
    except (FeatureError, gbdt.TrainingError, EvaluationError) as exc:
        _diag(type(exc).__name__, str(exc))
    except (OSError, ValueError, KeyError) as exc:
        _diag(type(exc).__name__, str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
