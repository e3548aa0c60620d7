"""Jitter-timestep ablation on the refinement stage.

Perturbed ground-truth poses stand in for model predictions; each timestep
setting refines the same predictions. Emits CSV to stdout.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hangpose import dataset as ds
from hangpose import evaluate as ev
from hangpose import geometry as geo


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-values", default="1,3,6,10")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--perturb", type=float, default=0.002)
    ap.add_argument("--seed", type=int, default=37)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    scenes = [(geo.standard_mug(0), geo.rack_archetype("height"))]
    data = ds.generate_demos(scenes, per_hook=5, rng=rng, condition_mode="none")
    rows = ev.ablate_timesteps(
        data,
        [int(v) for v in args.t_values.split(",")],
        trials=args.trials,
        rng=np.random.default_rng(args.seed + 1),
        perturb=args.perturb,
    )
    print("t_jitter,success_rate,t_avg")
    for row in rows:
        print(f"{row.t_jitter},{row.success_rate!r},{row.t_avg!r}")


if __name__ == "__main__":
    main()
