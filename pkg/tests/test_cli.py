import csv
import logging

import numpy as np
import pytest

from auvrl import cli
from auvrl.errors import NonFiniteLoss
from auvrl.policy import MlpParams, save_checkpoint

SMOKE = """\
[run]
mode = velocity_only
seed = 2
[episode]
max_steps = 300
[ppo]
n_actors = 2
n_steps = 500
minibatch_size = 250
n_epochs = 2
total_timesteps = 10000
learning_rate = 3e-4
"""


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("train")
    cfg = root / "smoke.ini"
    cfg.write_text(SMOKE)
    assert cli.main(["train", "--config", str(cfg), "--out", str(root / "run")]) == 0
    return root, cfg


def test_smoke_training_writes_outputs(trained_run):
    root, cfg = trained_run
    run = root / "run"
    header, rows = read(run / "learning_curve.csv")
    assert header[:2] == ["total_steps", "mean_episode_reward"] and len(rows) == 10
    for name in ("best.npz", "latest.npz", "config.ini", "trajectory.csv", "path.csv", "eval_episodes.csv"):
        assert (run / name).is_file()
    # the input config is left alone
    assert cfg.read_text() == SMOKE


def test_snapshot_reproduces_run(trained_run, tmp_path):
    root, _ = trained_run
    assert cli.main(["train", "--config", str(root / "run" / "config.ini"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "learning_curve.csv").read_bytes() == (root / "run" / "learning_curve.csv").read_bytes()
    assert (tmp_path / "trajectory.csv").read_bytes() == (root / "run" / "trajectory.csv").read_bytes()


def test_plotdata_complete_and_idempotent(trained_run, tmp_path):
    root, _ = trained_run
    assert cli.main(["plotdata", str(root / "run"), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["plotdata", str(root / "run"), "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(cli.PLOT_FILES)
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        header, rows = read(tmp_path / "a" / name)
        assert tuple(header) == cli.PLOT_FILES[name] and rows


def test_plotdata_missing_curve(tmp_path, caplog):
    assert cli.main(["eval", "--mode", "pid_only", "--out", str(tmp_path)]) == 0
    with caplog.at_level(logging.ERROR):
        assert cli.main(["plotdata", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "learning_curve.csv" in caplog.text


def test_rudder_mode_only_samples_rudder(tmp_path, caplog):
    cfg = tmp_path / "r.ini"
    cfg.write_text(SMOKE.replace("velocity_only", "pid_assist_rudder").replace("10000", "1000"))
    with caplog.at_level(logging.INFO):
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    assert "agent actuators delta_r; classical actuators n, delta_s" in caplog.text


def test_invalid_coefficient_file(tmp_path, caplog):
    coef = tmp_path / "bad.coef"
    coef.write_text("I_y = -5\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\ncoefficients = {coef}\n")
    with caplog.at_level(logging.ERROR):
        assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "NonPositiveDefinite" in caplog.text


@pytest.mark.parametrize("text", ["[run]\nbogus = 1\n", "[nope]\nx = 1\n", "[ppo]\ngamma = 1.5\n",
                                  "[ppo]\nn_steps = many\n", "[run]\nmode = flying\n"])
def test_bad_config_rejected(tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert cli.main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert cli.main(["train", "--config", str(tmp_path / "none.ini")]) == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise NonFiniteLoss("ratio overflow")

    monkeypatch.setattr(cli, "train", broken)
    assert cli.main(["train", "--mode", "velocity_only", "--out", str(tmp_path)]) == cli.EXIT_NUMERICAL


def test_pid_baseline_eval_converges(tmp_path):
    assert cli.main(["eval", "--mode", "pid_only", "--out", str(tmp_path)]) == 0
    header, rows = read(tmp_path / "trajectory.csv")
    assert tuple(header) == cli.EVAL_TRAJECTORY_HEADER
    data = np.array(rows, dtype=float)
    col = {name: i for i, name in enumerate(header)}
    t, seg = data[:, col["time"]], data[:, col["segment"]]
    # late on the first straight segment both errors have settled
    late = (seg == 0) & (t > 20)
    assert late.any()
    assert np.max(np.abs(data[late, col["e"]])) < 1.0 and np.max(np.abs(data[late, col["h"]])) < 1.0
    _, summary = read(tmp_path / "eval_episodes.csv")
    assert summary[0][-1] == "1"


def test_current_column(tmp_path):
    assert cli.main(["eval", "--mode", "pid_only", "--current", "off", "--out", str(tmp_path / "off")]) == 0
    assert cli.main(["eval", "--mode", "pid_only", "--current", "on", "--out", str(tmp_path / "on")]) == 0
    for name, check in (("off", lambda c: np.all(c == 0)), ("on", lambda c: np.all((c >= 0.5) & (c <= 1.0)))):
        header, rows = read(tmp_path / name / "trajectory.csv")
        c = np.array([float(r[header.index("current_intensity")]) for r in rows])
        assert check(c), name


def test_eval_deterministic(trained_run, tmp_path):
    root, _ = trained_run
    args = ["eval", "--mode", "velocity_only", "--checkpoint", str(root / "run" / "best.npz"), "--seed", "3"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_checkpoint_mode_mismatch(trained_run, tmp_path):
    root, _ = trained_run
    ck = str(root / "run" / "best.npz")
    assert cli.main(["eval", "--mode", "end_to_end", "--checkpoint", ck, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["eval", "--mode", "velocity_only", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["eval", "--mode", "pid_only", "--checkpoint", ck, "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_combined_eval_uses_both_agents(tmp_path):
    files = []
    for mode in ("pid_assist_rudder", "pid_assist_elevator"):
        p = MlpParams.init(16, 1, np.random.default_rng(len(files)))
        f = tmp_path / f"{mode}.npz"
        save_checkpoint(f, p, {"mode": mode})
        files += ["--checkpoint", str(f)]
    assert cli.main(["eval", "--mode", "combined", *files, "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "trajectory.csv").is_file()
    assert cli.main(["eval", "--mode", "combined", *files[:2], "--out", str(tmp_path / "o2")]) == cli.EXIT_CONFIG


def test_evaluation_only_modes_cannot_train(tmp_path):
    assert cli.main(["train", "--mode", "combined", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_inline_comments_allowed(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\nmode = pid_only   # baseline\ncoefficients =   ; packaged default\n")
    run = cli.build_run_config(cli.load_config(str(cfg)))
    assert run.mode == "pid_only" and run.coefficients == ""
