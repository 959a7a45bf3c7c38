"""Clipped-surrogate PPO with GAE over synchronous parallel actors."""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, NonFiniteLoss
from .policy import (Adam, MlpParams, backward, clip_grad_norm, deterministic_action, entropy,
                     forward, gaussian_log_prob, sample, save_checkpoint, squash)

log = logging.getLogger(__name__)


@dataclass
class PpoConfig:
    learning_rate: float = 5e-5
    gamma: float = 0.999
    gae_lambda: float = 0.95
    n_actors: int = 10
    n_steps: int = 6144
    n_epochs: int = 4
    minibatch_size: int = 1024
    clip_epsilon: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float | None = 0.5
    normalize_advantages: bool = True
    total_timesteps: int = 30_000_000
    hidden: tuple = (64, 64)
    log_std_init: float = float(np.log(0.5))
    # episodes averaged for the learning curve and best-checkpoint tracking
    reward_window: int = 100

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError("gae_lambda must lie in [0, 1]")
        if self.n_actors < 1 or self.n_steps < 1 or self.n_epochs < 1:
            raise ConfigError("n_actors, n_steps and n_epochs must be positive")
        if not 0 < self.minibatch_size < self.n_actors * self.n_steps:
            raise ConfigError("minibatch_size must be positive and smaller than n_actors * n_steps")
        if self.clip_epsilon <= 0 or self.learning_rate <= 0:
            raise ConfigError("clip_epsilon and learning_rate must be positive")
        self.hidden = tuple(int(h) for h in self.hidden)

    @property
    def batch_size(self) -> int:
        return self.n_actors * self.n_steps


class RolloutBuffer:
    """Fixed-capacity (n_steps, n_actors) storage for one collection phase.

    ``next_values[t, i]`` is the value of the state reached after step ``t``:
    the next stored value inside an episode, the critic's estimate of the
    final observation on truncation, and zero on a true terminal.
    """

    def __init__(self, n_steps: int, n_actors: int, obs_dim: int, act_dim: int):
        self.n_steps, self.n_actors = n_steps, n_actors
        self.obs = np.zeros((n_steps, n_actors, obs_dim))
        self.actions = np.zeros((n_steps, n_actors, act_dim))   # pre-squash samples
        self.log_probs = np.zeros((n_steps, n_actors))
        self.rewards = np.zeros((n_steps, n_actors))
        self.values = np.zeros((n_steps, n_actors))
        self.next_values = np.zeros((n_steps, n_actors))
        self.dones = np.zeros((n_steps, n_actors), dtype=bool)
        self.advantages = np.zeros((n_steps, n_actors))
        self.returns = np.zeros((n_steps, n_actors))

    def flat(self) -> dict:
        n = self.n_steps * self.n_actors
        return {
            "obs": self.obs.reshape(n, -1),
            "actions": self.actions.reshape(n, -1),
            "log_probs": self.log_probs.reshape(n),
            "advantages": self.advantages.reshape(n),
            "returns": self.returns.reshape(n),
            "values": self.values.reshape(n),
        }


def compute_gae(rewards, values, next_values, dones, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates and return targets.

    Arrays are (T, ...) with time first.  The TD residual is
    ``r_t + gamma * next_values_t - values_t`` and the exponentially weighted
    sum restarts after every ``done``.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    deltas = rewards + gamma * np.asarray(next_values, dtype=float) - values
    carry = 1.0 - np.asarray(dones, dtype=float)
    adv = np.zeros_like(deltas)
    running = np.zeros_like(deltas[0])
    for t in range(len(deltas) - 1, -1, -1):
        running = deltas[t] + gamma * lam * carry[t] * running
        adv[t] = running
    return adv, adv + values


def clipped_surrogate(ratio, advantages, clip_epsilon: float) -> np.ndarray:
    """Per-sample ``min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)``."""
    ratio = np.asarray(ratio, dtype=float)
    advantages = np.asarray(advantages, dtype=float)
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    return np.minimum(ratio * advantages, clipped * advantages)


def ppo_loss(params: MlpParams, batch: dict, clip_epsilon: float, value_coef: float = 0.5,
             entropy_coef: float = 0.0, with_grad: bool = True):
    """Minibatch PPO loss ``-L_clip + c_v * (V - R)^2 - c_e * H`` and its gradients.

    Returns ``(loss, grads, stats)``; ``grads`` is None when ``with_grad`` is
    False.  Raises NonFiniteLoss if the ratio overflows or the loss is not
    finite.
    """
    out = forward(params, batch["obs"], keep_cache=with_grad)
    mean, log_std, value = out.mean, out.log_std, out.value
    u = batch["actions"]
    n = len(u)
    new_lp = gaussian_log_prob(mean, log_std, u)
    with np.errstate(over="raise", invalid="raise"):
        try:
            ratio = np.exp(new_lp - batch["log_probs"])
        except FloatingPointError as exc:
            raise NonFiniteLoss(f"policy ratio overflow: {exc}") from None
    adv = batch["advantages"]
    surrogate = clipped_surrogate(ratio, adv, clip_epsilon)
    v_err = value - batch["returns"]
    ent = entropy(log_std)
    loss = -surrogate.mean() + value_coef * np.mean(v_err ** 2) - entropy_coef * ent
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"PPO loss is {loss}")
    stats = {
        "policy_loss": float(-surrogate.mean()),
        "value_loss": float(np.mean(v_err ** 2)),
        "entropy": ent,
        "approx_kl": float(np.mean(batch["log_probs"] - new_lp)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)),
    }
    if not with_grad:
        return float(loss), None, stats

    # the unclipped branch carries the gradient where it is the active minimum
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    active = ratio * adv <= clipped * adv
    d_lp = -(active * adv * ratio) / n
    std = np.exp(log_std)
    z = (u - mean) / std
    d_mean = d_lp[:, None] * z / std
    d_log_std = np.sum(d_lp[:, None] * (z * z - 1.0), axis=0) - entropy_coef * np.ones_like(log_std)
    d_value = value_coef * 2.0 * v_err / n
    grads = backward(params, out, d_mean, d_log_std, d_value)
    return float(loss), grads, stats


def worker_seeds(seed: int, n_actors: int) -> list[np.random.SeedSequence]:
    """Independent per-actor streams; actor i's stream does not depend on n_actors."""
    root = np.random.SeedSequence(seed)
    return [np.random.SeedSequence(entropy=root.entropy, spawn_key=(i,)) for i in range(n_actors)]


class _Actor:
    """One environment plus its own RNG for action noise and episode seeds."""

    def __init__(self, env, seed_seq: np.random.SeedSequence):
        self.env = env
        self.rng = np.random.default_rng(seed_seq)
        self.obs = env.reset(self._episode_seed())
        self.episode_reward = 0.0
        self.episode_len = 0

    def _episode_seed(self) -> int:
        return int(self.rng.integers(0, 2**31 - 1))

    def reset(self):
        self.obs = self.env.reset(self._episode_seed())
        self.episode_reward = 0.0
        self.episode_len = 0


@dataclass
class TrainResult:
    params: MlpParams
    best_params: MlpParams
    best_mean_reward: float
    curve: list = field(default_factory=list)
    episodes: list = field(default_factory=list)


CURVE_HEADER = ("total_steps", "mean_episode_reward", "episodes", "policy_loss", "value_loss",
                "entropy", "approx_kl", "clip_fraction")


def collect_rollout(params: MlpParams, actors: list, buffer: RolloutBuffer, episodes: list, total_steps: int):
    """Run the frozen policy for ``n_steps`` on every actor (lockstep, in-process)."""
    for t in range(buffer.n_steps):
        obs = np.stack([a.obs for a in actors])
        out = forward(params, obs)
        buffer.obs[t] = obs
        buffer.values[t] = out.value
        for i, actor in enumerate(actors):
            u = out.mean[i] + out.std * actor.rng.standard_normal(params.act_dim)
            buffer.actions[t, i] = u
            buffer.log_probs[t, i] = gaussian_log_prob(out.mean[i], out.log_std, u)
            next_obs, reward, done, info = actor.env.step(squash(u))
            buffer.rewards[t, i] = reward
            buffer.dones[t, i] = done
            actor.episode_reward += reward
            actor.episode_len += 1
            if done:
                if info.get("truncated"):
                    buffer.next_values[t, i] = forward(params, next_obs).value[0]
                else:
                    buffer.next_values[t, i] = 0.0
                episodes.append({
                    "total_steps": total_steps + (t + 1) * len(actors),
                    "reward": actor.episode_reward,
                    "length": actor.episode_len,
                    **{k: info[k] for k in ("success", "mean_abs_e", "mean_abs_h", "mean_abs_surge_error")
                       if k in info},
                })
                actor.reset()
            else:
                actor.obs = next_obs
    last = forward(params, np.stack([a.obs for a in actors])).value
    # inside an episode the next value is the following stored value
    for t in range(buffer.n_steps):
        following = buffer.values[t + 1] if t + 1 < buffer.n_steps else last
        buffer.next_values[t] = np.where(buffer.dones[t], buffer.next_values[t], following)


def update(params: MlpParams, optimizer: Adam, buffer: RolloutBuffer, config: PpoConfig,
           rng: np.random.Generator) -> dict:
    """K epochs of shuffled minibatch Adam steps on the clipped loss."""
    data = buffer.flat()
    adv = data["advantages"]
    if config.normalize_advantages:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    data = {**data, "advantages": adv}
    n = len(adv)
    stats_sum: dict = {}
    count = 0
    for _ in range(config.n_epochs):
        order = rng.permutation(n)
        for start in range(0, n - config.minibatch_size + 1, config.minibatch_size):
            idx = order[start:start + config.minibatch_size]
            mb = {k: v[idx] for k, v in data.items()}
            _, grads, stats = ppo_loss(params, mb, config.clip_epsilon, config.value_coef, config.entropy_coef)
            clip_grad_norm(grads, config.max_grad_norm)
            optimizer.step(params, grads)
            for k, v in stats.items():
                stats_sum[k] = stats_sum.get(k, 0.0) + v
            count += 1
    return {k: v / count for k, v in stats_sum.items()}


def initial_params(config: PpoConfig, obs_dim: int, act_dim: int, seed: int) -> MlpParams:
    """The untrained network ``train`` starts from for this seed."""
    init_seq = np.random.SeedSequence(seed).spawn(2)[0]
    return MlpParams.init(obs_dim, act_dim, np.random.default_rng(init_seq), hidden=config.hidden,
                          log_std=config.log_std_init)


def train(config: PpoConfig, env_factory: Callable[[int], object], seed: int,
          out_dir: str | Path | None = None, callback: Callable | None = None,
          metadata: dict | None = None) -> TrainResult:
    """Synchronous PPO: collect N x T steps, compute GAE, optimise K epochs, repeat.

    ``env_factory(i)`` builds the environment for actor ``i``.  When
    ``out_dir`` is given the learning curve, episode log, ``latest.npz`` and
    ``best.npz`` (highest windowed mean episode reward) are written there.
    """
    envs = [env_factory(i) for i in range(config.n_actors)]
    obs_dim, act_dim = envs[0].obs_dim, envs[0].action_dim
    params = initial_params(config, obs_dim, act_dim, seed)
    opt_seq = np.random.SeedSequence(seed).spawn(2)[1]
    optimizer = Adam(params, config.learning_rate)
    shuffle_rng = np.random.default_rng(opt_seq)
    actors = [_Actor(env, s) for env, s in zip(envs, worker_seeds(seed + 1, config.n_actors))]
    buffer = RolloutBuffer(config.n_steps, config.n_actors, obs_dim, act_dim)

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = TrainResult(params, params.copy(), -np.inf)
    total = 0
    n_updates = max(1, config.total_timesteps // config.batch_size)
    meta = {**(metadata or {}), "seed": seed, "ppo": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()}}
    for it in range(n_updates):
        collect_rollout(params, actors, buffer, result.episodes, total)
        total += config.batch_size
        buffer.advantages[:], buffer.returns[:] = compute_gae(
            buffer.rewards, buffer.values, buffer.next_values, buffer.dones, config.gamma, config.gae_lambda)
        try:
            stats = update(params, optimizer, buffer, config, shuffle_rng)
        except NonFiniteLoss:
            if out is not None:
                save_checkpoint(out / "latest.npz", params, {**meta, "total_steps": total, "aborted": "non-finite loss"})
            raise
        recent = [e["reward"] for e in result.episodes[-config.reward_window:]]
        mean_reward = float(np.mean(recent)) if recent else float("nan")
        row = {"total_steps": total, "mean_episode_reward": mean_reward, "episodes": len(result.episodes), **stats}
        result.curve.append(row)
        if recent and mean_reward > result.best_mean_reward:
            result.best_mean_reward = mean_reward
            result.best_params = params.copy()
            if out is not None:
                save_checkpoint(out / "best.npz", params, {**meta, "total_steps": total, "mean_episode_reward": mean_reward})
        if out is not None:
            save_checkpoint(out / "latest.npz", params, {**meta, "total_steps": total})
            write_curve(out / "learning_curve.csv", result.curve)
        log.info("update %d/%d steps=%d mean_reward=%.4f", it + 1, n_updates, total, mean_reward)
        if callback is not None:
            callback(it, row, params)
    if out is not None:
        write_episode_log(out / "episodes.csv", result.episodes)
    return result


def write_curve(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for row in curve:
            writer.writerow([row["total_steps"], *(repr(float(row.get(k, float("nan")))) for k in CURVE_HEADER[1:2]),
                             row["episodes"], *(repr(float(row.get(k, float("nan")))) for k in CURVE_HEADER[3:])])


def write_episode_log(path, episodes):
    keys = ("total_steps", "reward", "length", "success", "mean_abs_e", "mean_abs_h", "mean_abs_surge_error")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for e in episodes:
            writer.writerow([e.get(k, "") if not isinstance(e.get(k), float) else repr(e[k]) for k in keys])


def evaluate(params: MlpParams, env, seeds, deterministic: bool = True, rng: np.random.Generator | None = None) -> list[dict]:
    """Run one episode per seed and return the environment's episode summaries."""
    summaries = []
    for seed in seeds:
        obs = env.reset(int(seed))
        while True:
            out = forward(params, obs)
            if deterministic:
                action = deterministic_action(out)
            else:
                action = sample(out, rng)[1]
            obs, _, done, info = env.step(action)
            if done:
                summaries.append(info)
                break
    return summaries
