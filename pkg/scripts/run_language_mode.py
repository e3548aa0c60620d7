"""Language-specified experiment: per-hook conditions on the higher/lower rack.

Evaluates how reliably the commanded condition steers generation onto the
matching hook, and shows the rejection behavior for an unregistered phrase.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hangpose import dataset as ds
from hangpose import evaluate as ev
from hangpose import geometry as geo
from hangpose import network as net
from hangpose.igso3 import TableCache
from hangpose.schedule import make_schedule


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--train-steps", type=int, default=24000)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=27)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    scenes = [(geo.standard_mug(0), geo.rack_archetype("height"))]
    data = ds.generate_demos(scenes, per_hook=5, rng=rng, condition_mode="per-hook")

    sched = make_schedule()
    tables = TableCache()
    config = net.TrainConfig(
        steps=args.train_steps, batch_size=24, lr=0.07, seed=args.seed,
        decay_at=(0.5, 0.8), decay_factor=0.25,
    )
    params, losses = net.train(data.train_examples(), sched, config, tables)
    print(f"training done, final loss {np.mean(losses[-500:]):.4f}")

    model = net.Denoiser(
        params=params,
        sched=sched,
        norm_offset=data.normalization.offset,
        norm_scale=data.normalization.scale,
    )
    for condition in ("higher", "lower", "red"):
        report = ev.evaluate(
            model, data, "specified", args.trials,
            np.random.default_rng(args.seed + 1),
            condition=condition, tables=tables,
        )
        share = ev.mode_coverage(report).get(condition, 0.0)
        print(f"condition={condition!r}: {report.to_dict()}")
        print(f"  commanded-hook share of successes: {share:.2f}")


if __name__ == "__main__":
    main()
