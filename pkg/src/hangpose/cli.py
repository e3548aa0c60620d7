"""Command-line interface.

Subcommands cover the full pipeline: dataset generation, training,
conditional sampling, refinement of a single pose, trial evaluation, the
jitter-timestep ablation, and dumping rotation-noise density tables. Every
command is deterministic under --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import igso3
from .dataset import generate_demos, load_dataset, save_dataset
from .diffusion import Pose, sample_target_pose
from .evaluate import ablate_timesteps, evaluate
from .igso3 import TableCache
from .network import TrainConfig, load_checkpoint, save_checkpoint, train
from .refine import refine_pose
from .schedule import (
    DEFAULT_BETA_MAX,
    DEFAULT_BETA_MIN,
    DEFAULT_STEPS,
    make_adjust_schedule,
    make_schedule,
)

_RACK_CHOICES = ("height", "length", "tilt", "section", "curve")


def format_pose_line(pose: Pose) -> str:
    vals = list(pose.rotation.ravel()) + list(pose.translation)
    return " ".join(repr(float(v)) for v in vals)


def parse_pose_line(line: str) -> Pose:
    vals = [float(v) for v in line.split()]
    if len(vals) != 12:
        raise ValueError("pose line must hold 9 rotation + 3 translation values")
    return Pose(np.array(vals[:9]).reshape(3, 3), np.array(vals[9:]))


def _out_stream(path: str | None):
    return open(path, "w") if path else sys.stdout


def cmd_gen_data(args) -> int:
    rng = np.random.default_rng(args.seed)
    racks = args.racks.split(",")
    hook_filter = tuple(args.hooks.split(",")) if args.hooks else None
    scenes = []
    for mug_index in range(args.mugs):
        for kind in racks:
            scenes.append(
                (geo.standard_mug(mug_index), geo.rack_archetype(kind, hook_filter))
            )
    dataset = generate_demos(
        scenes,
        per_hook=args.per_hook,
        rng=rng,
        n_points=args.points,
        condition_mode=args.condition_mode,
        resolution=args.resolution,
    )
    save_dataset(args.out, dataset)
    print(f"wrote {len(dataset.demos)} demos to {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    sched = make_schedule(args.diffusion_steps, args.beta_min, args.beta_max)
    config = TrainConfig(
        steps=args.steps, batch_size=args.batch, lr=args.lr, seed=args.seed
    )
    params, losses = train(dataset.train_examples(), sched, config)
    save_checkpoint(
        args.out,
        params,
        {
            "steps": sched.steps,
            "beta_min": args.beta_min,
            "beta_max": args.beta_max,
        },
        dataset.normalization.offset,
        dataset.normalization.scale,
    )
    print(
        f"trained {args.steps} steps, final loss {losses[-1]!r}, "
        f"checkpoint at {args.out}"
    )
    return 0


def cmd_sample(args) -> int:
    model = load_checkpoint(args.checkpoint)
    mug, rack = geo.load_scene(args.scene)
    rng = np.random.default_rng(args.seed)
    mug_cloud = geo.sample_surface(mug, args.points, rng)
    rack_cloud = geo.sample_surface(rack, args.points, rng)
    offset, scale = model.norm_offset, model.norm_scale
    bound = model.bind(
        (mug_cloud - offset) / scale, (rack_cloud - offset) / scale, args.condition
    )
    tables = TableCache()
    lines = []
    for trial_rng in rng.spawn(args.count):
        pose = sample_target_pose(bound, model.sched, tables, trial_rng)
        world = Pose(pose.rotation, pose.translation * scale + offset)
        lines.append(format_pose_line(world))
    out = _out_stream(args.out)
    for line in lines:
        print(line, file=out)
    if args.out:
        out.close()
    return 0


def cmd_refine(args) -> int:
    mug, rack = geo.load_scene(args.scene)
    hook = rack.hook(args.hook)
    pose = parse_pose_line(Path(args.pose).read_text().strip().splitlines()[0])
    adj = make_adjust_schedule(t_jitter=args.t_jitter)
    rng = np.random.default_rng(args.seed)
    result = refine_pose(
        mug,
        rack,
        hook,
        pose,
        adj,
        rng,
        max_iter=args.max_iter,
        resolution=args.resolution,
    )
    record = {
        "succeeded": bool(result.succeeded),
        "iterations": result.iterations,
        "c_gdc": result.c_gdc,
        "z_opt": result.z_opt,
        "pose": format_pose_line(result.pose),
    }
    out = _out_stream(args.out)
    print(json.dumps(record, sort_keys=True), file=out)
    if args.out:
        out.close()
    return 0


def cmd_eval(args) -> int:
    dataset = load_dataset(args.data)
    model = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(args.seed)
    adj = make_adjust_schedule(t_jitter=args.t_jitter)
    report = evaluate(
        model,
        dataset,
        args.mode,
        args.trials,
        rng,
        condition=args.condition,
        adj=adj,
        max_iter=args.max_iter,
        resolution=args.resolution,
    )
    out = _out_stream(args.out)
    print(json.dumps(report.to_dict(), sort_keys=True), file=out)
    if args.out:
        out.close()
    return 0


def cmd_ablate(args) -> int:
    dataset = load_dataset(args.data)
    t_values = [int(v) for v in args.t_values.split(",")]
    rng = np.random.default_rng(args.seed)
    rows = ablate_timesteps(
        dataset,
        t_values,
        trials=args.trials,
        rng=rng,
        perturb=args.perturb,
        max_iter=args.max_iter,
        resolution=args.resolution,
    )
    out = _out_stream(args.out)
    print("t_jitter,success_rate,t_avg", file=out)
    for row in rows:
        print(f"{row.t_jitter},{row.success_rate!r},{row.t_avg!r}", file=out)
    if args.out:
        out.close()
    return 0


def cmd_dump_density(args) -> int:
    table = igso3.build_table(args.eps2, args.n_omega, args.length)
    out = _out_stream(args.out)
    print("omega,density,cdf", file=out)
    for w, d, c in zip(table.omega, table.density, table.cdf):
        print(f"{float(w)!r},{float(d)!r},{float(c)!r}", file=out)
    if args.out:
        out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hangpose",
        description="Hanging target-pose generation: decoupled SE(3) diffusion "
        "plus gravity-descent-coverage refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, resolution=True):
        p.add_argument("--seed", type=int, default=0)
        if resolution:
            p.add_argument("--resolution", type=float, default=geo.DEFAULT_RESOLUTION)

    p = sub.add_parser("gen-data", help="generate a demonstration dataset")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--mugs", type=int, default=1)
    p.add_argument("--racks", default="height", help=f"comma list of {_RACK_CHOICES}")
    p.add_argument("--hooks", default=None, help="optional comma list of hook ids")
    p.add_argument("--per-hook", type=int, default=5)
    p.add_argument("--points", type=int, default=geo.DEFAULT_CLOUD_POINTS)
    p.add_argument(
        "--condition-mode",
        choices=("per-hook", "arbitrary", "none"),
        default="per-hook",
    )
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train the noise-prediction network")
    common(p, resolution=False)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=4000, help="SGD steps")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--diffusion-steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--beta-min", type=float, default=DEFAULT_BETA_MIN)
    p.add_argument("--beta-max", type=float, default=DEFAULT_BETA_MAX)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sample", help="sample target poses from a checkpoint")
    common(p, resolution=False)
    p.add_argument("--scene", required=True)
    p.add_argument("--condition", default="none")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--points", type=int, default=geo.DEFAULT_CLOUD_POINTS)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("refine", help="refine one predicted pose")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--hook", required=True)
    p.add_argument("--pose", required=True, help="file with one pose line")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--t-jitter", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_refine)

    p = sub.add_parser("eval", help="run evaluation trials")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("single", "multi", "specified"), required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--condition", default=None)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--t-jitter", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser(
        "ablate-timestep", help="sweep the jitter timestep on refinement"
    )
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--t-values", default="1,3,6,10")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--perturb", type=float, default=0.002)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("dump-density", help="dump a rotation-noise density table")
    common(p, resolution=False)
    p.add_argument("--eps2", type=float, required=True)
    p.add_argument("--n-omega", type=int, default=igso3.DEFAULT_N_OMEGA)
    p.add_argument("--length", type=int, default=igso3.DEFAULT_SERIES_LENGTH)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_dump_density)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
