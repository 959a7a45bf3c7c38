"""Command-line entry point: ``auvrl train | eval | plotdata``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from .control import (AGENT_ACTUATORS, MODES, Autopilot, DEFAULT_HEADING_GAINS, DEFAULT_PITCH_GAINS, DEFAULT_SURGE_GAINS, PidGains,
                      pid_channels)
from .environment import (EpisodeConfig, PathFollowingEnv, assist_observation, evaluation_path, observe,
                          turn_path, write_episode_summaries)
from .errors import (AuvError, ConfigError, NonFiniteLoss, NonPositiveDefinite, NumericalDivergence,
                     ShapeMismatch, SingularAttitude)
from .guidance import Path
from .kinetics import ControlInput, HydroModel, load_coefficients
from .policy import MlpParams, deterministic_action, forward, load_checkpoint
from .ppo import PpoConfig, train
from .simulator import TRAJECTORY_HEADER, trajectory_row

log = logging.getLogger("auvrl")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

# names accepted for run.train_path / run.eval_path besides a CSV file
NAMED_PATHS = {"evaluation": evaluation_path, "turn": turn_path}

GUIDANCE_COLUMNS = ("u_d", "chi_d", "chi", "ups_d", "ups", "e", "h", "segment",
                    "delta_r_norm", "delta_s_norm", "u_err_norm", "chi_err_norm", "ups_err_norm",
                    "e_norm", "h_norm")
EVAL_TRAJECTORY_HEADER = TRAJECTORY_HEADER + GUIDANCE_COLUMNS
PATH_HEADER = ("x", "y", "z")


@dataclass
class RunConfig:
    mode: str = "velocity_only"
    seed: int = 0
    current: bool = False
    out: str = "runs/default"
    # vehicle coefficient file; empty means the packaged default
    coefficients: str = ""
    # "random", a named fixed path ("evaluation", "turn") or a CSV file
    train_path: str = "random"
    eval_path: str = "evaluation"
    eval_episodes: int = 1
    eval_seed: int = 12345
    episode: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    autopilot: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be at least 1")


RUN_KEYS = tuple(f.name for f in dataclasses.fields(RunConfig) if f.name not in ("episode", "ppo", "autopilot"))
EPISODE_KEYS = ("u_d", "init_radius", "heading_spread", "max_steps", "min_cumulative_reward", "dt",
                "lookahead", "n_waypoints", "reward_shape")
PPO_KEYS = tuple(f.name for f in dataclasses.fields(PpoConfig))
GAIN_FIELDS = ("kp", "ki", "kd", "integral_limit", "output_limit")
AUTOPILOT_KEYS = tuple(f"{loop}_{g}" for loop in ("surge", "heading", "pitch") for g in GAIN_FIELDS)
SECTIONS = {"run": RUN_KEYS, "episode": EPISODE_KEYS, "ppo": PPO_KEYS, "autopilot": AUTOPILOT_KEYS}


def _defaults() -> dict:
    ep, pp = EpisodeConfig(), PpoConfig()
    gains = {"surge": DEFAULT_SURGE_GAINS, "heading": DEFAULT_HEADING_GAINS, "pitch": DEFAULT_PITCH_GAINS}
    return {
        "run": {k: getattr(RunConfig(), k) for k in RUN_KEYS},
        "episode": {k: getattr(ep, k) for k in EPISODE_KEYS},
        "ppo": {k: getattr(pp, k) for k in PPO_KEYS},
        "autopilot": {f"{loop}_{g}": getattr(gains[loop], g) for loop in gains for g in GAIN_FIELDS},
    }


def _parse_value(raw: str, default, where: str):
    text = raw.strip()
    try:
        if default is None or text.lower() == "none":
            if text.lower() == "none":
                return None
            try:
                return float(text)
            except ValueError:
                return text
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_config(path: str | None) -> dict:
    """Merge an INI file over the defaults; unknown sections or keys are rejected."""
    values = _defaults()
    if path is None:
        return values
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[section][key] = _parse_value(raw, values[section][key], f"{path} [{section}] {key}")
    return values


def apply_overrides(values: dict, args) -> dict:
    for flag in ("mode", "seed", "out"):
        v = getattr(args, flag, None)
        if v is not None:
            values["run"][flag] = v
    if getattr(args, "current", None) is not None:
        values["run"]["current"] = args.current == "on"
    return values


def build_run_config(values: dict) -> RunConfig:
    return RunConfig(**values["run"], episode=dict(values["episode"]), ppo=dict(values["ppo"]),
                     autopilot=dict(values["autopilot"]))


def write_config_snapshot(path, values: dict):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    for section, keys in SECTIONS.items():
        parser[section] = {k: _format_value(values[section][k]) for k in keys}
    buf = io.StringIO()
    parser.write(buf)
    FilePath(path).write_text(buf.getvalue())


def config_values(run: RunConfig) -> dict:
    return {
        "run": {k: getattr(run, k) for k in RUN_KEYS},
        "episode": run.episode, "ppo": run.ppo, "autopilot": run.autopilot,
    }


# -- object construction -------------------------------------------------

def make_model(run: RunConfig) -> HydroModel:
    if not run.coefficients:
        return HydroModel()
    return load_coefficients(run.coefficients)


def make_autopilot(run: RunConfig) -> Autopilot:
    gains = {loop: PidGains(**{g: float(run.autopilot[f"{loop}_{g}"]) for g in GAIN_FIELDS})
             for loop in ("surge", "heading", "pitch")}
    return Autopilot.from_gains(gains["surge"], gains["heading"], gains["pitch"])


def resolve_path(source: str) -> Path | None:
    if source == "random":
        return None
    if source in NAMED_PATHS:
        return NAMED_PATHS[source]()
    try:
        return Path.load_csv(source)
    except FileNotFoundError:
        raise ConfigError(f"path file not found: {source}") from None


def make_episode_config(run: RunConfig, mode: str, path_source: str) -> EpisodeConfig:
    return EpisodeConfig(mode=mode, current_enabled=run.current, path=resolve_path(path_source), **run.episode)


def make_ppo_config(run: RunConfig) -> PpoConfig:
    return PpoConfig(**run.ppo)


# -- evaluation ----------------------------------------------------------

class EvalPolicy:
    """Deterministic (mean-action) controller for any evaluation mode."""

    def __init__(self, mode: str, checkpoints: dict[str, MlpParams]):
        self.mode = mode
        self.checkpoints = checkpoints

    def __call__(self, env: PathFollowingEnv, obs: np.ndarray) -> np.ndarray:
        if self.mode == "pid_only":
            return np.zeros(0)
        if self.mode == "combined":
            u_d = env.config.u_d
            actions = []
            for channel, mode in (("rudder", "pid_assist_rudder"), ("elevator", "pid_assist_elevator")):
                o = assist_observation(env.state, env.guidance_state, env.command, channel, u_d)
                actions.append(float(deterministic_action(forward(self.checkpoints[mode], o))[0]))
            return np.array(actions)
        return np.atleast_1d(deterministic_action(forward(self.checkpoints[self.mode], obs)))


def load_eval_policy(mode: str, checkpoint_files: list[str]) -> EvalPolicy:
    """Load and check checkpoints against ``mode``.

    ``combined`` needs one rudder and one elevator checkpoint; ``pid_only``
    takes none; every other mode takes exactly one checkpoint of that mode.
    """
    if mode == "pid_only":
        if checkpoint_files:
            raise ConfigError("pid_only evaluation takes no checkpoints")
        return EvalPolicy(mode, {})
    loaded = {}
    for f in checkpoint_files:
        try:
            params, meta = load_checkpoint(f)
        except FileNotFoundError:
            raise ConfigError(f"checkpoint not found: {f}") from None
        ck_mode = meta.get("mode")
        if ck_mode is None:
            raise ShapeMismatch(f"{f}: checkpoint carries no mode")
        if ck_mode in loaded:
            raise ConfigError(f"two checkpoints given for mode {ck_mode}")
        loaded[ck_mode] = params
    needed = ("pid_assist_rudder", "pid_assist_elevator") if mode == "combined" else (mode,)
    if set(loaded) != set(needed):
        raise ShapeMismatch(f"mode {mode} needs checkpoints for {', '.join(needed)}; got {', '.join(loaded) or 'none'}")
    for m, params in loaded.items():
        expect = EpisodeConfig(mode=m)
        if params.obs_dim != expect.obs_dim or params.act_dim != expect.action_dim:
            raise ShapeMismatch(f"checkpoint for {m} has dims ({params.obs_dim}, {params.act_dim}), "
                                f"expected ({expect.obs_dim}, {expect.action_dim})")
    return EvalPolicy(mode, loaded)


def _guidance_row(env: PathFollowingEnv, obs_e_to_e: np.ndarray) -> list[float]:
    g, cmd = env.guidance_state, env.command
    return [env.config.u_d, g.chi_d, g.chi, g.ups_d, g.ups, g.tracking.e, g.tracking.h, env.segment,
            cmd.delta_r, cmd.delta_s, *obs_e_to_e[6:11]]


def run_evaluation_episode(env: PathFollowingEnv, policy: EvalPolicy, seed: int) -> tuple[dict, list[list[float]]]:
    """One deterministic episode; returns its summary and per-step trajectory rows."""
    obs = env.reset(seed)
    fin = env.model.fin_limit_rad

    def row():
        c = env.command
        control = ControlInput(c.n, c.delta_r * fin, c.delta_s * fin)
        normalised = observe(env.state, env.guidance_state, c, "end_to_end", env.config.u_d)
        return trajectory_row(env.state, control) + _guidance_row(env, normalised)

    rows = [row()]
    while True:
        obs, _, done, info = env.step(policy(env, obs))
        rows.append(row())
        if done:
            return info, rows


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            writer.writerow([repr(float(x)) for x in r])


def evaluate_to_dir(run: RunConfig, policy: EvalPolicy, out: FilePath) -> list[dict]:
    """Write trajectory.csv (first episode), path.csv and eval_episodes.csv."""
    model = make_model(run)
    env = PathFollowingEnv(make_episode_config(run, policy.mode, run.eval_path), model, make_autopilot(run))
    summaries = []
    for k in range(run.eval_episodes):
        info, rows = run_evaluation_episode(env, policy, run.eval_seed + k)
        summaries.append(info)
        if k == 0:
            write_rows(out / "trajectory.csv", EVAL_TRAJECTORY_HEADER, rows)
            write_rows(out / "path.csv", PATH_HEADER, env.path.waypoints)
    write_episode_summaries(out / "eval_episodes.csv", summaries)
    return summaries


# -- commands ------------------------------------------------------------

def cmd_train(run: RunConfig, values: dict) -> int:
    if run.mode in ("combined", "pid_only"):
        raise ConfigError(f"mode {run.mode} is evaluation-only; train the two pid_assist agents instead")
    out = FilePath(run.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config_snapshot(out / "config.ini", values)
    model = make_model(run)
    ep_cfg = make_episode_config(run, run.mode, run.train_path)
    ppo_cfg = make_ppo_config(run)
    classical = [name for name, on in zip(("n", "delta_r", "delta_s"), pid_channels(run.mode)) if on]
    agent = list(AGENT_ACTUATORS[run.mode])
    fixed = [name for name in ("n", "delta_r", "delta_s") if name not in classical and name not in agent]
    log.info("mode %s: agent actuators %s; classical actuators %s; held at zero %s", run.mode,
             ", ".join(agent) or "none", ", ".join(classical) or "none", ", ".join(fixed) or "none")

    def factory(i):
        return PathFollowingEnv(ep_cfg, model, make_autopilot(run))

    result = train(ppo_cfg, factory, run.seed, out,
                   metadata={"mode": run.mode, "agent_actuators": agent})
    policy = EvalPolicy(run.mode, {run.mode: result.best_params})
    summaries = evaluate_to_dir(run, policy, out)
    log.info("best mean episode reward %.4f; evaluation mean |e| %.3f m, mean |h| %.3f m, mean |u_d-u| %.3f m/s",
             result.best_mean_reward, np.mean([s["mean_abs_e"] for s in summaries]),
             np.mean([s["mean_abs_h"] for s in summaries]),
             np.mean([s["mean_abs_surge_error"] for s in summaries]))
    return EXIT_OK


def cmd_eval(run: RunConfig, values: dict, checkpoints: list[str]) -> int:
    policy = load_eval_policy(run.mode, checkpoints)
    out = FilePath(run.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config_snapshot(out / "config.ini", values)
    summaries = evaluate_to_dir(run, policy, out)
    for s in summaries:
        log.info("seed %d: steps %d success %s mean |e| %.3f mean |h| %.3f", s["seed"], s["steps"],
                 s["success"], s["mean_abs_e"], s["mean_abs_h"])
    return EXIT_OK


PLOT_FILES = {
    "velocity.csv": ("time", "u", "v", "w", "u_d"),
    "control.csv": ("time", "n", "delta_r_norm", "delta_s_norm"),
    "error.csv": ("time", "u_err_norm", "chi_err_norm", "ups_err_norm", "e_norm", "h_norm"),
    "trajectory_3d.csv": ("kind", "x", "y", "z"),
    "learning_curve.csv": ("total_steps", "mean_episode_reward"),
}


def _read_csv(path: FilePath) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty")
    return rows[0], rows[1:]


def _select(header, rows, columns):
    idx = [header.index(c) for c in columns]
    return [[r[i] for i in idx] for r in rows]


def cmd_plotdata(run_dir: str, out_dir: str | None) -> int:
    """Derive one tidy CSV per figure from a run directory."""
    src = FilePath(run_dir)
    dst = FilePath(out_dir) if out_dir else src / "plots"
    needed = ("trajectory.csv", "path.csv", "learning_curve.csv")
    missing = [name for name in needed if not (src / name).is_file()]
    for name in missing:
        log.error("missing input: %s", src / name)
    dst.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, list[list[str]]] = {}
    if "trajectory.csv" not in missing:
        header, rows = _read_csv(src / "trajectory.csv")
        for name in ("velocity.csv", "control.csv", "error.csv"):
            outputs[name] = _select(header, rows, PLOT_FILES[name])
        if "path.csv" not in missing:
            _, path_rows = _read_csv(src / "path.csv")
            outputs["trajectory_3d.csv"] = ([["path", *r] for r in path_rows]
                                            + [["vehicle", *r] for r in _select(header, rows, ("x", "y", "z"))])
    if "learning_curve.csv" not in missing:
        header, rows = _read_csv(src / "learning_curve.csv")
        outputs["learning_curve.csv"] = _select(header, rows, PLOT_FILES["learning_curve.csv"])
    for name, rows in outputs.items():
        with open(dst / name, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PLOT_FILES[name])
            writer.writerows(rows)
    if missing:
        raise ConfigError("missing inputs: " + ", ".join(str(src / m) for m in missing))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="auvrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--current", choices=("on", "off"), help="enable the ocean current")
        p.add_argument("--out", help="output directory")

    common(sub.add_parser("train", help="train a PPO controller"))
    p_eval = sub.add_parser("eval", help="deterministic evaluation on the fixed test path")
    common(p_eval)
    p_eval.add_argument("--checkpoint", action="append", default=[],
                        help="policy checkpoint; give twice (rudder, elevator) for combined mode")
    p_plot = sub.add_parser("plotdata", help="derive per-figure CSVs from a run directory")
    p_plot.add_argument("run_dir")
    p_plot.add_argument("--out", help="destination directory (default RUN_DIR/plots)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "plotdata":
            return cmd_plotdata(args.run_dir, args.out)
        values = apply_overrides(load_config(args.config), args)
        run = build_run_config(values)
        # validate everything that can fail before any long-running work
        make_model(run)
        make_episode_config(run, run.mode, run.train_path)
        make_ppo_config(run)
        make_autopilot(run)
        if args.command == "train":
            return cmd_train(run, values)
        return cmd_eval(run, values, args.checkpoint)
    except NonPositiveDefinite as exc:
        log.error("NonPositiveDefinite: %s", exc)
        return EXIT_CONFIG
    except (ConfigError, ShapeMismatch) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG
    except (SingularAttitude, NumericalDivergence, NonFiniteLoss) as exc:
        log.error("numerical failure (%s): %s", type(exc).__name__, exc)
        return EXIT_NUMERICAL
    except AuvError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
