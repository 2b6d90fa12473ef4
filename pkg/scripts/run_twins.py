"""Two classes generated with identical kinematics: how much do they get confused?"""
import argparse
import json

import numpy as np

from pitchkin import gbdt
from pitchkin.evaluate import SplitSpec, confusion_matrix, stratified_split
from pitchkin.pipeline import extract_table
from pitchkin.pose import PITCH_TYPES
from pitchkin.synth import SynthConfig, generate_dataset, signature_feature_mask


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--twin", default="FF,FT")
    p.add_argument("--rounds", type=int, default=300)
    p.add_argument("--out", default=None)
    args = p.parse_args()

    twins = tuple(args.twin.split(","))
    balanced = {c: 1 / len(PITCH_TYPES) for c in PITCH_TYPES}
    eps, _ = generate_dataset(SynthConfig(n_episodes=args.n, seed=args.seed, twin_classes=twins,
                                          class_distribution=balanced))
    table = extract_table([e.sequence for e in eps])
    y = np.array(table.labels, dtype=object)
    tr, te = stratified_split(y, SplitSpec(seed=args.seed))
    model = gbdt.fit(table.X[tr], y[tr], gbdt.TrainConfig(rounds=args.rounds, seed=args.seed),
                     classes=PITCH_TYPES, feature_names=table.names)
    cm, _ = confusion_matrix(y[te], model.predict(table.X[te]), PITCH_TYPES)

    print("row-normalized confusion (%)")
    print("      " + "".join(f"{c:>7}" for c in PITCH_TYPES))
    for c, row in zip(PITCH_TYPES, cm):
        print(f"{c:<6}" + "".join(f"{100 * v:>7.1f}" for v in row))
    a, b = (PITCH_TYPES.index(c) for c in twins)
    imp = gbdt.gain_importance(model)
    share = float(imp[signature_feature_mask(table.names)].sum())
    print(f"\n{twins[0]}->{twins[1]} {cm[a, b]:.3f}   {twins[1]}->{twins[0]} {cm[b, a]:.3f}")
    print(f"importance on signature-bearing families: {share:.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"twins": twins, "confusion": cm.tolist(), "signature_share": share}, fh, indent=1)


if __name__ == "__main__":
    main()
