"""Compiled RK4 kernel for the vehicle model.

Expands the same force terms as :mod:`auvrl.kinetics` into scalar code so
one step costs microseconds.  ``tests/test_simulator.py`` checks it against
the matrix implementation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .kinetics import HydroModel

# status codes returned by rk4_step
OK = 0
SINGULAR = 1
DIVERGED = 2

_SING = np.pi / 2 - 1e-3


def pack(model: HydroModel) -> np.ndarray:
    m = model
    mz = m.mass_kg * m.z_g_m
    return np.array([
        m.mass_kg - m.X_udot, m.mass_kg - m.Y_vdot, m.mass_kg - m.Z_wdot,
        m.I_x - m.K_pdot, m.I_y - m.M_qdot, m.I_z - m.N_rdot, mz,
        m.X_u, m.Y_v, m.Y_r, m.Z_w, m.Z_q, m.K_p, m.M_w, m.M_q, m.N_v, m.N_r,
        m.X_uu, m.Y_vv, m.Z_ww, m.K_pp, m.M_ww, m.N_vv, m.Y_rr, m.Z_qq, m.M_qq, m.N_rr,
        m.Y_uvf + m.Y_uvb, m.Y_urf, m.Z_uwf + m.Z_uwb, m.Z_uqf,
        m.M_uwf + m.M_uwb, m.M_uqf, m.N_uvf + m.N_uvb, m.N_urf,
        m.Y_uudr, m.N_uudr, m.Z_uuds, m.M_uuds,
        m.weight_N, m.buoyancy_N, m.z_g_m, m.thrust_max_N,
    ])


@njit(cache=True)
def _rhs(k, minv, eta, nu, ctrl, vc, out_eta, out_nu):
    phi, theta, psi = eta[3], eta[4], eta[5]
    if abs(theta) >= _SING:
        return SINGULAR
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    tt = st / ct
    R00 = cp * ct; R01 = -sp * cf + cp * st * sf; R02 = sp * sf + cp * cf * st
    R10 = sp * ct; R11 = cp * cf + sf * st * sp; R12 = -cp * sf + st * sp * cf
    R20 = -st; R21 = ct * sf; R22 = ct * cf
    u0, v0, w0, p, q, r = nu[0], nu[1], nu[2], nu[3], nu[4], nu[5]
    out_eta[0] = R00 * u0 + R01 * v0 + R02 * w0
    out_eta[1] = R10 * u0 + R11 * v0 + R12 * w0
    out_eta[2] = R20 * u0 + R21 * v0 + R22 * w0
    out_eta[3] = p + sf * tt * q + cf * tt * r
    out_eta[4] = cf * q - sf * r
    out_eta[5] = sf / ct * q + cf / ct * r

    # relative linear velocity: v - R^T v_c
    u = u0 - (R00 * vc[0] + R10 * vc[1] + R20 * vc[2])
    v = v0 - (R01 * vc[0] + R11 * vc[1] + R21 * vc[2])
    w = w0 - (R02 * vc[0] + R12 * vc[1] + R22 * vc[2])

    m11, m22, m33, i44, i55, i66, mz = k[0], k[1], k[2], k[3], k[4], k[5], k[6]
    Xu, Yv, Yr, Zw, Zq, Kp, Mw, Mq, Nv, Nr = k[7], k[8], k[9], k[10], k[11], k[12], k[13], k[14], k[15], k[16]
    Xuu, Yvv, Zww, Kpp, Mww, Nvv, Yrr, Zqq, Mqq, Nrr = k[17], k[18], k[19], k[20], k[21], k[22], k[23], k[24], k[25], k[26]
    Luv, Lur, Luw, Luq, Muw, Muq, Nuv, Nur = k[27], k[28], k[29], k[30], k[31], k[32], k[33], k[34]
    Yd, Nd, Zd, Md = k[35], k[36], k[37], k[38]
    W, B, zg, thrust = k[39], k[40], k[41], k[42]

    mu, mv, mw = m11 * u, m22 * v, m33 * w
    ip, iq, ir = i44 * p, i55 * q, i66 * r
    # C(nu_r) nu_r
    c0 = mz * r * p + mw * q - mv * r
    c1 = -mw * p + mz * r * q + mu * r
    c2 = (-mz * p + mv) * p + (-mz * q - mu) * q
    c3 = -mz * r * u + mw * v + (mz * p - mv) * w + ir * q - iq * r
    c4 = -mw * u - mz * r * v + (mz * q + mu) * w - ir * p + ip * r
    c5 = mv * u - mu * v + iq * p - ip * q
    # damping forces D(nu_r) nu_r (D = -coefficients)
    au, av, aw, ap, aq, ar = abs(u), abs(v), abs(w), abs(p), abs(q), abs(r)
    d0 = -(Xu + Xuu * au) * u
    d1 = -(Yv + Yvv * av + Luv * u) * v - (Yr + Yrr * ar + Lur * u) * r
    d2 = -(Zw + Zww * aw + Luw * u) * w - (Zq + Zqq * aq + Luq * u) * q
    d3 = -(Kp + Kpp * ap) * p
    d4 = -(Mw + Mww * aw + Muw * u) * w - (Mq + Mqq * aq + Muq * u) * q
    d5 = -(Nv + Nvv * av + Nuv * u) * v - (Nr + Nrr * ar + Nur * u) * r
    # restoring
    g0 = (W - B) * st
    g1 = -(W - B) * ct * sf
    g2 = -(W - B) * ct * cf
    g3 = zg * W * ct * sf
    g4 = zg * W * st
    # control
    uu = u * u
    t0 = ctrl[0] * thrust
    t1 = Yd * uu * ctrl[1]
    t2 = Zd * uu * ctrl[2]
    t4 = Md * uu * ctrl[2]
    t5 = Nd * uu * ctrl[1]

    f0 = t0 - c0 - d0 - g0
    f1 = t1 - c1 - d1 - g1
    f2 = t2 - c2 - d2 - g2
    f3 = -c3 - d3 - g3
    f4 = t4 - c4 - d4 - g4
    f5 = t5 - c5 - d5
    for i in range(6):
        out_nu[i] = (minv[i, 0] * f0 + minv[i, 1] * f1 + minv[i, 2] * f2
                     + minv[i, 3] * f3 + minv[i, 4] * f4 + minv[i, 5] * f5)
    return OK


@njit(cache=True)
def rk4_step(k, minv, eta, nu, ctrl, vc, dt, eta_out, nu_out):
    """One RK4 step; writes the result into eta_out/nu_out, returns a status."""
    k1e = np.empty(6); k1n = np.empty(6)
    k2e = np.empty(6); k2n = np.empty(6)
    k3e = np.empty(6); k3n = np.empty(6)
    k4e = np.empty(6); k4n = np.empty(6)
    te = np.empty(6); tn = np.empty(6)
    if _rhs(k, minv, eta, nu, ctrl, vc, k1e, k1n) != OK:
        return SINGULAR
    for i in range(6):
        te[i] = eta[i] + 0.5 * dt * k1e[i]
        tn[i] = nu[i] + 0.5 * dt * k1n[i]
    if _rhs(k, minv, te, tn, ctrl, vc, k2e, k2n) != OK:
        return SINGULAR
    for i in range(6):
        te[i] = eta[i] + 0.5 * dt * k2e[i]
        tn[i] = nu[i] + 0.5 * dt * k2n[i]
    if _rhs(k, minv, te, tn, ctrl, vc, k3e, k3n) != OK:
        return SINGULAR
    for i in range(6):
        te[i] = eta[i] + dt * k3e[i]
        tn[i] = nu[i] + dt * k3n[i]
    if _rhs(k, minv, te, tn, ctrl, vc, k4e, k4n) != OK:
        return SINGULAR
    for i in range(6):
        eta_out[i] = eta[i] + dt / 6.0 * (k1e[i] + 2.0 * k2e[i] + 2.0 * k3e[i] + k4e[i])
        nu_out[i] = nu[i] + dt / 6.0 * (k1n[i] + 2.0 * k2n[i] + 2.0 * k3n[i] + k4n[i])
    for i in range(6):
        if not (abs(eta_out[i]) <= 1e6 and abs(nu_out[i]) <= 1e6):
            return DIVERGED
    return OK
