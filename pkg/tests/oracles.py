"""Independent reference computations used as test oracles.

Nothing here calls into the package's formula code; each oracle rebuilds its
answer from first principles (elementary rotations, explicit sums, dense
sampling, small-step integration or finite differences).
"""

import math

import numpy as np
from scipy.integrate import trapezoid


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def rotation_zyx(phi, theta, psi):
    return rot_z(psi) @ rot_y(theta) @ rot_x(phi)


def euler_rate_matrix(phi, theta):
    """Inverse of the map from Euler rates to body rates, built by inversion."""
    # body rates = E @ euler rates
    E = np.array([
        [1.0, 0.0, -math.sin(theta)],
        [0.0, math.cos(phi), math.sin(phi) * math.cos(theta)],
        [0.0, -math.sin(phi), math.cos(phi) * math.cos(theta)],
    ])
    return np.linalg.inv(E)


def pose_rate(eta, nu):
    phi, theta, psi = eta[3:6]
    out = np.zeros(6)
    out[:3] = rotation_zyx(phi, theta, psi) @ nu[:3]
    out[3:] = euler_rate_matrix(phi, theta) @ nu[3:]
    return out


def wrap(a):
    w = math.atan2(math.sin(a), math.cos(a))
    return math.pi if w == -math.pi else w


def gae_brute_force(rewards, values, next_values, dones, gamma, lam):
    """Direct double sum over future residuals, stopping at episode ends."""
    T = len(rewards)
    adv = np.zeros(T)
    for t in range(T):
        total, weight = 0.0, 1.0
        for k in range(t, T):
            delta = rewards[k] + gamma * next_values[k] - values[k]
            total += weight * delta
            if dones[k]:
                break
            weight *= gamma * lam
        adv[t] = total
    return adv


def discounted_reward_to_go(rewards, gamma):
    return np.array([sum(gamma ** (k - t) * rewards[k] for k in range(t, len(rewards)))
                     for t in range(len(rewards))])


def closest_point_dense(a, b, p, n=100_001):
    """Closest of n evenly spaced samples on segment ab to point p."""
    a, b, p = (np.asarray(x, dtype=float) for x in (a, b, p))
    ts = np.linspace(0.0, 1.0, n)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    d = np.linalg.norm(pts - p[None, :], axis=1)
    i = int(np.argmin(d))
    return pts[i], float(d[i])


def euler_integrate(f, y0, dt, n_sub):
    """Explicit Euler with n_sub equal substeps over dt."""
    y = np.array(y0, dtype=float)
    h = dt / n_sub
    for _ in range(n_sub):
        y = y + h * f(y)
    return y


def central_difference(fn, arrays: dict, step=1e-5):
    """Central finite-difference gradient of scalar fn() w.r.t. every array entry (in place)."""
    grads = {}
    for key, a in arrays.items():
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            orig = a[idx]
            a[idx] = orig + step
            up = fn()
            a[idx] = orig - step
            down = fn()
            a[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads[key] = g
    return grads


def rigid_body_mass(mass, z_g, inertia_diag, added_diag):
    """Rigid-body plus added mass for a vehicle with CG at (0, 0, z_g)."""
    m = mass
    S = np.array([[0, -z_g, 0], [z_g, 0, 0], [0, 0, 0]], dtype=float)  # skew of r_g
    M_rb = np.zeros((6, 6))
    M_rb[:3, :3] = m * np.eye(3)
    M_rb[:3, 3:] = -m * S
    M_rb[3:, :3] = m * S
    M_rb[3:, 3:] = np.diag(inertia_diag)
    return M_rb - np.diag(added_diag)


def gaussian_density_integral(mean, std, lo, hi, n=200_001):
    xs = np.linspace(lo, hi, n)
    pdf = np.exp(-0.5 * ((xs - mean) / std) ** 2) / (std * math.sqrt(2 * math.pi))
    return float(trapezoid(pdf, xs))
