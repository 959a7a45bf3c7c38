"""Recompute the independent oracle values and freeze them to tests/data/frozen_oracles.json.

Run once after changing an oracle; the test suite compares the package
against the frozen numbers and, where cheap, against the live oracle.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402


def gae_case(seed=7, T=20):
    rng = np.random.default_rng(seed)
    rewards = rng.normal(size=T)
    values = rng.normal(size=T)
    dones = rng.uniform(size=T) < 0.2
    next_values = np.where(dones, 0.0, np.append(values[1:], rng.normal()))
    adv = oracles.gae_brute_force(rewards, values, next_values, dones, 0.99, 0.95)
    return {"rewards": rewards.tolist(), "values": values.tolist(), "next_values": next_values.tolist(),
            "dones": dones.astype(int).tolist(), "gamma": 0.99, "lam": 0.95, "advantages": adv.tolist()}


def vehicle_mass():
    return oracles.rigid_body_mass(18.0, 0.01, [0.04, 1.07, 1.07], [-1.0, -16.0, -16.0, 0.0, -0.73, -0.73])


def one_step_from_rest():
    # the only oracle that uses the package: the continuous-time derivative,
    # integrated here by fine explicit Euler instead of RK4
    from auvrl.kinetics import ControlInput, HydroModel
    from auvrl.simulator import state_derivative

    model = HydroModel()

    def f(y):
        d_eta, d_nu = state_derivative(model, y[:6], y[6:], ControlInput(0.0, 0.0, 0.0))
        return np.concatenate([d_eta, d_nu])

    y = oracles.euler_integrate(f, np.zeros(12), 0.1, 10_000)
    return {"eta": y[:6].tolist(), "nu": y[6:].tolist()}


def main():
    M = vehicle_mass()
    frozen = {
        "gae": gae_case(),
        "mass_matrix": M.tolist(),
        "rest_acceleration": np.linalg.solve(M, [0.0, 0.0, -1.0, 0.0, 0.0, 0.0]).tolist(),
        "one_step_from_rest": one_step_from_rest(),
        # half thrust of 10 N balanced by 6 u + 2 u^2
        "surge_steady_half_thrust": (-6.0 + math.sqrt(36.0 + 80.0)) / 4.0,
        "cross_track_reward_half": -0.08 * (1.0 - math.exp(-1.25)),
        "gaussian_integral": oracles.gaussian_density_integral(0.3, 0.5, -8.0, 8.0),
    }
    out = ROOT / "tests" / "data" / "frozen_oracles.json"
    out.write_text(json.dumps(frozen, indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
