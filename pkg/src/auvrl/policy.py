"""Actor-critic MLP with a tanh-squashed diagonal Gaussian policy.

Separate actor and critic trunks, two tanh hidden layers each, and a
state-independent log standard deviation.  Gradients are computed by hand
(reverse mode) so the learner needs nothing beyond numpy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonFiniteLoss, ShapeMismatch

CHECKPOINT_VERSION = 1
LOG_2PI = np.log(2.0 * np.pi)

ACTOR_KEYS = ("actor_w0", "actor_b0", "actor_w1", "actor_b1", "actor_w2", "actor_b2", "log_std")
CRITIC_KEYS = ("critic_w0", "critic_b0", "critic_w1", "critic_b1", "critic_w2", "critic_b2")
PARAM_KEYS = ACTOR_KEYS + CRITIC_KEYS


def _orthogonal(rng, shape, gain):
    a = rng.standard_normal(shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))
    if shape[0] < shape[1]:
        q = q.T
    return gain * q[: shape[0], : shape[1]]


@dataclass
class MlpParams:
    """Parameter arrays keyed by name; weights are (fan_in, fan_out)."""

    arrays: dict
    obs_dim: int
    act_dim: int
    hidden: tuple = (64, 64)

    @classmethod
    def init(cls, obs_dim: int, act_dim: int, rng: np.random.Generator,
             hidden=(64, 64), log_std=np.log(0.5)) -> "MlpParams":
        h0, h1 = hidden
        arrays = {
            "actor_w0": _orthogonal(rng, (obs_dim, h0), np.sqrt(2)),
            "actor_b0": np.zeros(h0),
            "actor_w1": _orthogonal(rng, (h0, h1), np.sqrt(2)),
            "actor_b1": np.zeros(h1),
            "actor_w2": _orthogonal(rng, (h1, act_dim), 0.01),
            "actor_b2": np.zeros(act_dim),
            "log_std": np.full(act_dim, float(log_std)),
            "critic_w0": _orthogonal(rng, (obs_dim, h0), np.sqrt(2)),
            "critic_b0": np.zeros(h0),
            "critic_w1": _orthogonal(rng, (h0, h1), np.sqrt(2)),
            "critic_b1": np.zeros(h1),
            "critic_w2": _orthogonal(rng, (h1, 1), 1.0),
            "critic_b2": np.zeros(1),
        }
        return cls(arrays, obs_dim, act_dim, tuple(hidden))

    def __getitem__(self, key):
        return self.arrays[key]

    def copy(self) -> "MlpParams":
        return MlpParams({k: v.copy() for k, v in self.arrays.items()}, self.obs_dim, self.act_dim, self.hidden)

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def flat(self) -> np.ndarray:
        return np.concatenate([self.arrays[k].ravel() for k in PARAM_KEYS])

    def check_shapes(self):
        h0, h1 = self.hidden
        expected = {
            "actor_w0": (self.obs_dim, h0), "actor_b0": (h0,),
            "actor_w1": (h0, h1), "actor_b1": (h1,),
            "actor_w2": (h1, self.act_dim), "actor_b2": (self.act_dim,),
            "log_std": (self.act_dim,),
            "critic_w0": (self.obs_dim, h0), "critic_b0": (h0,),
            "critic_w1": (h0, h1), "critic_b1": (h1,),
            "critic_w2": (h1, 1), "critic_b2": (1,),
        }
        for key, shape in expected.items():
            if key not in self.arrays or self.arrays[key].shape != shape:
                got = None if key not in self.arrays else self.arrays[key].shape
                raise ShapeMismatch(f"{key}: expected {shape}, got {got}")
            if not np.all(np.isfinite(self.arrays[key])):
                raise ShapeMismatch(f"{key}: non-finite values")


@dataclass
class PolicyOutput:
    mean: np.ndarray      # pre-squash Gaussian mean, (batch, act_dim)
    log_std: np.ndarray   # (act_dim,)
    value: np.ndarray     # (batch,)
    cache: dict | None = None

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)


def forward(params: MlpParams, obs, keep_cache: bool = False) -> PolicyOutput:
    """Evaluate actor mean, log-std and critic value for a batch of observations."""
    x = np.asarray(obs, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != params.obs_dim:
        raise ShapeMismatch(f"observation has {x.shape[1]} features, network expects {params.obs_dim}")
    p = params.arrays
    a0 = np.tanh(x @ p["actor_w0"] + p["actor_b0"])
    a1 = np.tanh(a0 @ p["actor_w1"] + p["actor_b1"])
    mean = a1 @ p["actor_w2"] + p["actor_b2"]
    c0 = np.tanh(x @ p["critic_w0"] + p["critic_b0"])
    c1 = np.tanh(c0 @ p["critic_w1"] + p["critic_b1"])
    value = (c1 @ p["critic_w2"] + p["critic_b2"])[:, 0]
    cache = {"x": x, "a0": a0, "a1": a1, "c0": c0, "c1": c1} if keep_cache else None
    if single and not keep_cache:
        return PolicyOutput(mean[0], p["log_std"].copy(), value, None)
    return PolicyOutput(mean, p["log_std"].copy(), value, cache)


def gaussian_log_prob(mean, log_std, pre_squash) -> np.ndarray:
    """Diagonal Gaussian log-density of the pre-squash sample, summed over dims."""
    z = (np.asarray(pre_squash) - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)


def squash_correction(pre_squash) -> np.ndarray:
    """log|d tanh(u)/du| summed over dims, in a numerically stable form."""
    u = np.asarray(pre_squash, dtype=float)
    return np.sum(2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u)), axis=-1)


def log_prob(output: PolicyOutput, pre_squash, squashed: bool = False) -> np.ndarray:
    """Log-density of a pre-squash action; ``squashed`` gives the density of tanh(u)."""
    lp = gaussian_log_prob(output.mean, output.log_std, pre_squash)
    if squashed:
        lp = lp - squash_correction(pre_squash)
    return lp


# largest double below 1; tanh rounds to exactly +-1 for |u| > ~19
_ACTION_BOUND = np.nextafter(1.0, 0.0)


def squash(pre_squash) -> np.ndarray:
    """tanh, kept strictly inside (-1, 1)."""
    return np.clip(np.tanh(pre_squash), -_ACTION_BOUND, _ACTION_BOUND)


def sample(output: PolicyOutput, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(pre_squash, action)`` with ``action = tanh(pre_squash)`` in (-1, 1)."""
    u = output.mean + output.std * rng.standard_normal(np.shape(output.mean))
    return u, squash(u)


def deterministic_action(output: PolicyOutput) -> np.ndarray:
    return squash(output.mean)


def entropy(log_std) -> float:
    """Entropy of the (pre-squash) diagonal Gaussian."""
    return float(np.sum(log_std + 0.5 * (LOG_2PI + 1.0)))


def backward(params: MlpParams, output: PolicyOutput, d_mean, d_log_std, d_value) -> dict:
    """Chain rule from output gradients back to every parameter.

    ``d_mean`` is (batch, act_dim), ``d_log_std`` (act_dim,), ``d_value``
    (batch,).  The two trunks are independent, so a zero ``d_mean`` gives
    exactly zero actor-trunk gradients.
    """
    c = output.cache
    if c is None:
        raise ValueError("forward(..., keep_cache=True) is required for gradients")
    # overflow shows up as non-finite entries, checked below
    with np.errstate(over="ignore", invalid="ignore"):
        g = _backward(params.arrays, c, d_mean, d_log_std, d_value)
    for key, grad in g.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(f"non-finite gradient for {key}")
    return g


def _backward(p, c, d_mean, d_log_std, d_value) -> dict:
    g = {}
    x = c["x"]

    # actor trunk
    g["actor_w2"] = c["a1"].T @ d_mean
    g["actor_b2"] = d_mean.sum(axis=0)
    da1 = (d_mean @ p["actor_w2"].T) * (1.0 - c["a1"] ** 2)
    g["actor_w1"] = c["a0"].T @ da1
    g["actor_b1"] = da1.sum(axis=0)
    da0 = (da1 @ p["actor_w1"].T) * (1.0 - c["a0"] ** 2)
    g["actor_w0"] = x.T @ da0
    g["actor_b0"] = da0.sum(axis=0)
    g["log_std"] = np.asarray(d_log_std, dtype=float).copy()

    # critic trunk
    dv = np.asarray(d_value, dtype=float)[:, None]
    g["critic_w2"] = c["c1"].T @ dv
    g["critic_b2"] = dv.sum(axis=0)
    dc1 = (dv @ p["critic_w2"].T) * (1.0 - c["c1"] ** 2)
    g["critic_w1"] = c["c0"].T @ dc1
    g["critic_b1"] = dc1.sum(axis=0)
    dc0 = (dc1 @ p["critic_w1"].T) * (1.0 - c["c0"] ** 2)
    g["critic_w0"] = x.T @ dc0
    g["critic_b0"] = dc0.sum(axis=0)
    return g


class Adam:
    """Adam over a dict of parameter arrays (updated in place)."""

    def __init__(self, params: MlpParams, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: MlpParams, grads: dict):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.b1
            m += (1.0 - self.b1) * grad
            v *= self.b2
            v += (1.0 - self.b2) * grad * grad
            params.arrays[key] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_grad_norm(grads: dict, max_norm: float | None) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def save_checkpoint(path, params: MlpParams, metadata: dict | None = None):
    """Write all tensors plus architecture metadata to an ``.npz`` file."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "obs_dim": params.obs_dim,
        "act_dim": params.act_dim,
        "hidden": list(params.hidden),
        **(metadata or {}),
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp.npz")
    np.savez(tmp, __meta__=np.array(json.dumps(meta, sort_keys=True)), **params.arrays)
    tmp.replace(path)


def load_checkpoint(path, obs_dim: int | None = None, act_dim: int | None = None) -> tuple[MlpParams, dict]:
    """Load a checkpoint, rejecting version or dimension mismatches."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        arrays = {k: data[k].astype(float) for k in PARAM_KEYS if k in data.files}
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ShapeMismatch(f"{path}: unsupported checkpoint version {meta.get('version')}")
    if obs_dim is not None and meta["obs_dim"] != obs_dim:
        raise ShapeMismatch(f"{path}: checkpoint obs_dim {meta['obs_dim']} != {obs_dim}")
    if act_dim is not None and meta["act_dim"] != act_dim:
        raise ShapeMismatch(f"{path}: checkpoint act_dim {meta['act_dim']} != {act_dim}")
    params = MlpParams(arrays, meta["obs_dim"], meta["act_dim"], tuple(meta["hidden"]))
    params.check_shapes()
    return params, meta
