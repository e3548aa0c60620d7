import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hangpose import cli
from hangpose import geometry as geo
from hangpose.dataset import load_dataset
from hangpose.diffusion import Pose


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rc = cli.main(
        [
            "gen-data",
            "--out", str(root / "demos.jsonl"),
            "--mugs", "1",
            "--racks", "height",
            "--hooks", "higher",
            "--per-hook", "2",
            "--points", "64",
            "--seed", "3",
        ]
    )
    assert rc == 0
    geo.save_scene(
        root / "scene.json", geo.standard_mug(0), geo.rack_archetype("height")
    )
    hook = geo.rack_archetype("height").hook("higher")
    pose = geo.hanging_pose(geo.standard_mug(0), hook, 0.7, 0.0, False, 0.002)
    (root / "pose.txt").write_text(cli.format_pose_line(pose) + "\n")
    return root


def test_pose_line_roundtrip():
    rng = np.random.default_rng(0)
    from hangpose import so3

    pose = Pose(so3.random_rotation(rng), rng.uniform(-1, 1, 3))
    back = cli.parse_pose_line(cli.format_pose_line(pose))
    assert np.array_equal(back.rotation, pose.rotation)
    assert np.array_equal(back.translation, pose.translation)


def test_parse_pose_line_rejects_bad_input():
    with pytest.raises(ValueError):
        cli.parse_pose_line("1 2 3")


def test_gen_data_output_loads(workdir):
    data = load_dataset(workdir / "demos.jsonl")
    assert len(data.demos) == 2
    assert {d.hook_id for d in data.demos} == {"higher"}


def test_gen_data_deterministic(workdir, tmp_path):
    out2 = tmp_path / "again.jsonl"
    rc = cli.main(
        [
            "gen-data", "--out", str(out2),
            "--mugs", "1", "--racks", "height", "--hooks", "higher",
            "--per-hook", "2", "--points", "64", "--seed", "3",
        ]
    )
    assert rc == 0
    assert out2.read_bytes() == (workdir / "demos.jsonl").read_bytes()


def test_dump_density_csv(workdir, tmp_path):
    out = tmp_path / "density.csv"
    rc = cli.main(
        ["dump-density", "--eps2", "0.5", "--n-omega", "256", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "omega,density,cdf"
    assert len(lines) == 257
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == pytest.approx(np.pi)
    assert last[2] == 1.0


def test_dump_density_rejects_bad_eps2(capsys):
    rc = cli.main(["dump-density", "--eps2", "-1.0"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_refine_command_json(workdir, tmp_path):
    out = tmp_path / "refined.json"
    rc = cli.main(
        [
            "refine",
            "--scene", str(workdir / "scene.json"),
            "--hook", "higher",
            "--pose", str(workdir / "pose.txt"),
            "--seed", "1",
            "--out", str(out),
        ]
    )
    assert rc == 0
    rec = json.loads(out.read_text())
    assert rec["succeeded"] is True
    assert rec["iterations"] == 0
    assert rec["c_gdc"] > 0.0
    cli.parse_pose_line(rec["pose"])


def test_refine_unknown_hook_fails(workdir, capsys):
    rc = cli.main(
        [
            "refine",
            "--scene", str(workdir / "scene.json"),
            "--hook", "missing",
            "--pose", str(workdir / "pose.txt"),
        ]
    )
    assert rc == 2


def test_ablate_timestep_csv(workdir, tmp_path):
    out = tmp_path / "ablate.csv"
    rc = cli.main(
        [
            "ablate-timestep",
            "--data", str(workdir / "demos.jsonl"),
            "--t-values", "1,3",
            "--trials", "4",
            "--seed", "2",
            "--out", str(out),
        ]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t_jitter,success_rate,t_avg"
    assert len(lines) == 3


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "hangpose.cli", "dump-density", "--eps2", "0.3",
         "--n-omega", "256"],
        capture_output=True,
        text=True,
        cwd=Path(__file__).resolve().parent.parent,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("omega,density,cdf")
