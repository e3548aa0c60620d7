"""Multi-mode experiment: two hooks, no language conditions.

Reports the overall success rate and the per-hook share of successes (the
mode-coverage check that flags collapse onto a single hook).
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
    ap.add_argument("--train-steps", type=int, default=45000)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=17)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    scenes = [(geo.standard_mug(0), geo.rack_archetype("height"))]
    data = ds.generate_demos(scenes, per_hook=5, rng=rng, condition_mode="none")
    print(f"dataset: {len(data.demos)} demos on hooks "
          f"{sorted({d.hook_id for d in data.demos})}")

    sched = make_schedule()
    tables = TableCache()
    config = net.TrainConfig(
        steps=args.train_steps, batch_size=24, lr=0.07, seed=args.seed,
        decay_at=(0.5, 0.75, 0.9), decay_factor=0.3,
    )
    params, losses = net.train(data.train_examples(), sched, config, tables)
    print(f"training done, final loss {np.mean(losses[-500:]):.4f}")

    model = net.Denoiser(
        params=params,
        sched=sched,
        norm_offset=data.normalization.offset,
        norm_scale=data.normalization.scale,
    )
    report = ev.evaluate(
        model, data, "multi", args.trials, np.random.default_rng(args.seed + 1),
        tables=tables,
    )
    print(report.to_dict())
    print("mode coverage:", ev.mode_coverage(report))


if __name__ == "__main__":
    main()
