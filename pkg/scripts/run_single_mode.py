"""Single-mode experiment: one hook, five demos, train and evaluate.

Usage: python scripts/run_single_mode.py [--train-steps 16000] [--trials 50]
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
    ap.add_argument("--train-steps", type=int, default=16000)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    scenes = [(geo.standard_mug(0), geo.rack_archetype("height", ("higher",)))]
    data = ds.generate_demos(scenes, per_hook=5, rng=rng, condition_mode="none")
    print(f"dataset: {len(data.demos)} demos")

    sched = make_schedule()
    tables = TableCache()
    config = net.TrainConfig(
        steps=args.train_steps, batch_size=24, lr=0.06, seed=args.seed
    )
    params, losses = net.train(data.train_examples(), sched, config, tables)
    print(f"training done, final loss {np.mean(losses[-200:]):.4f}")

    model = net.Denoiser(
        params=params,
        sched=sched,
        norm_offset=data.normalization.offset,
        norm_scale=data.normalization.scale,
    )
    report = ev.evaluate(
        model, data, "single", args.trials, np.random.default_rng(args.seed + 1),
        tables=tables,
    )
    print(report.to_dict())


if __name__ == "__main__":
    main()
