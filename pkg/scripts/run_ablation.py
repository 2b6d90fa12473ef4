"""Feature-set ablation and sampling comparison on a synthetic dataset.

Trains one classifier per feature configuration (pose, +biomech, +delta) and
one per evenly spaced sampling density, then writes a JSON summary.
"""
import argparse
import json
import logging
import time

import numpy as np

from pitchkin import gbdt
from pitchkin.evaluate import SplitSpec, aggregate_importance, stratified_split
from pitchkin.features import CONFIGURATIONS, select_columns
from pitchkin.pipeline import extract_table
from pitchkin.pose import PITCH_TYPES
from pitchkin.synth import SynthConfig, generate_dataset

log = logging.getLogger("ablation")


def evaluate(X, y, tr, te, names, cfg):
    model = gbdt.fit(X[tr], y[tr], cfg, classes=PITCH_TYPES, feature_names=names)
    return model, float(np.mean(model.predict(X[te]) == y[te]))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--rounds", type=int, default=300)
    p.add_argument("--signature-scale", type=float, default=1.0)
    p.add_argument("--uniform-k", type=int, nargs="*", default=[3, 10])
    p.add_argument("--out", default="ablation.json")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    eps, _ = generate_dataset(SynthConfig(n_episodes=args.n, seed=args.seed,
                                          signature_scale=args.signature_scale))
    seqs = [e.sequence for e in eps]
    table = extract_table(seqs)
    y = np.array(table.labels, dtype=object)
    tr, te = stratified_split(y, SplitSpec(seed=args.seed))
    cfg = gbdt.TrainConfig(rounds=args.rounds, seed=args.seed)

    results = {"n": args.n, "seed": args.seed, "rounds": args.rounds, "configurations": {}}
    for name, prefixes in CONFIGURATIONS.items():
        cols = select_columns(table.names, prefixes)
        t0 = time.perf_counter()
        model, acc = evaluate(table.X[:, cols], y, tr, te, [table.names[i] for i in cols], cfg)
        log.info("%-20s %d features  acc %.4f  (%.0fs)", name, cols.size, acc, time.perf_counter() - t0)
        entry = {"n_features": int(cols.size), "accuracy": acc}
        if name == "pose+biomech+delta":
            agg = aggregate_importance(gbdt.gain_importance(model), model.feature_names)
            entry["importance"] = {k: agg[k] for k in ("category", "region", "event")}
        results["configurations"][name] = entry

    results["uniform"] = {}
    for k in args.uniform_k:
        u = extract_table(seqs, sampling="uniform", k=k)
        _, acc = evaluate(u.X, y, tr, te, u.names, cfg)
        log.info("uniform k=%-3d %d features  acc %.4f", k, len(u.names), acc)
        results["uniform"][str(k)] = {"n_features": len(u.names), "accuracy": acc}

    with open(args.out, "w") as fh:
        json.dump(results, fh, indent=1)


if __name__ == "__main__":
    main()
