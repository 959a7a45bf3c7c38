import numpy as np
import pytest
from hypothesis import given, strategies as st

from auvrl.errors import ConfigError, NonPositiveDefinite
from auvrl.kinetics import (ControlInput, HydroModel, acceleration, coriolis_matrix, control_force,
                            damping_matrix, default_coefficient_file, input_matrix, lift_matrix,
                            linear_damping, load_coefficients, mass_matrix, quadratic_damping,
                            restoring_vector)

MODEL = HydroModel()

# operating envelope of the model
u_env = st.floats(0.0, 2.0)
vw_env = st.floats(-0.3, 0.3)
p_env = st.floats(-1.2, 1.2)
qr_env = st.floats(-0.4, 0.4)
envelope = st.tuples(u_env, vw_env, vw_env, p_env, qr_env, qr_env).map(np.array)
anything = st.lists(st.floats(-5, 5), min_size=6, max_size=6).map(np.array)


def printed_coriolis(nu):
    """Numeric Coriolis matrix for the default vehicle, entry by entry."""
    u, v, w, p, q, r = nu
    return np.array([
        [0, 0, 0, 0.18 * r, 34 * w, -34 * v],
        [0, 0, 0, -34 * w, 0.18 * r, 19 * u],
        [0, 0, 0, -0.18 * p + 34 * v, -0.18 * q - 19 * u, 0],
        [-0.18 * r, 34 * w, 0.18 * p - 34 * v, 0, 1.8 * r, -1.8 * q],
        [-34 * w, -0.18 * r, 0.18 * q + 19 * u, -1.8 * r, 0, 0.04 * p],
        [34 * v, -19 * u, 0, 1.8 * q, -0.04 * p, 0],
    ])


def test_mass_matrix_values(frozen):
    M = mass_matrix(MODEL)
    assert M[0, 0] == 19 and M[1, 1] == 34 and M[2, 2] == 34
    assert M[3, 3] == 0.04 and M[4, 4] == 1.8 and M[5, 5] == 1.8
    assert M[0, 4] == M[4, 0] == 0.18 and M[1, 3] == M[3, 1] == -0.18
    np.testing.assert_allclose(M, frozen["mass_matrix"], atol=1e-15)


def test_mass_matrix_symmetric_positive_definite():
    M = mass_matrix(MODEL)
    assert np.array_equal(M, M.T)
    np.linalg.cholesky(M)


def test_indefinite_mass_rejected():
    with pytest.raises(NonPositiveDefinite):
        mass_matrix(MODEL.replace(I_x=-1.0))


def test_coriolis_zero_at_rest():
    assert np.array_equal(coriolis_matrix(MODEL, np.zeros(6)), np.zeros((6, 6)))


def test_coriolis_yaw_rate_coupling():
    C = coriolis_matrix(MODEL, [0, 0, 0, 0, 0, 1])
    assert C[0, 3] == 0.18 and C[3, 0] == -0.18


@given(anything)
def test_coriolis_matches_printed_matrix(nu):
    np.testing.assert_allclose(coriolis_matrix(MODEL, nu), printed_coriolis(nu), atol=1e-12)


@given(anything)
def test_coriolis_skew_symmetric(nu):
    C = coriolis_matrix(MODEL, nu)
    assert np.max(np.abs(C + C.T)) <= 1e-12


def test_damping_at_rest_is_linear_part():
    assert np.array_equal(damping_matrix(MODEL, np.zeros(6)), linear_damping(MODEL))


def test_damping_pure_surge_hand_sum():
    D = damping_matrix(MODEL, [1, 0, 0, 0, 0, 0])
    m = MODEL
    assert D[0, 0] == -(m.X_u + m.X_uu)
    assert D[1, 1] == -(m.Y_v + m.Y_uvf + m.Y_uvb)
    assert D[2, 2] == -(m.Z_w + m.Z_uwf + m.Z_uwb)
    assert D[4, 4] == -(m.M_q + m.M_uqf)
    assert D[5, 1] == -(m.N_v + m.N_uvf + m.N_uvb)
    assert np.array_equal(lift_matrix(MODEL, [1, 0, 0, 0, 0, 0]), -lift_matrix(MODEL, [-1, 0, 0, 0, 0, 0]))


@given(envelope)
def test_damping_dissipative_in_envelope(nu):
    assert nu @ damping_matrix(MODEL, nu) @ nu >= -1e-12


def test_quadratic_damping_even_in_velocity():
    nu = np.array([1.0, -0.2, 0.1, 0.5, -0.3, 0.2])
    assert np.array_equal(quadratic_damping(MODEL, nu), quadratic_damping(MODEL, -nu))


def test_restoring_level_attitude():
    assert np.array_equal(restoring_vector(MODEL, (0, 0, 0)), [0, 0, 1, 0, 0, 0])
    assert np.array_equal(restoring_vector(MODEL, (0, 0, 1.3)), [0, 0, 1, 0, 0, 0])


def test_restoring_pitch_and_roll_moments():
    g = restoring_vector(MODEL, (0, 0.1, 0))
    assert g[4] == pytest.approx(0.01 * 176 * np.sin(0.1), abs=1e-15)
    g = restoring_vector(MODEL, (0.2, 0, 0))
    assert g[3] == pytest.approx(0.01 * 176 * np.sin(0.2), abs=1e-15)
    # a positive moment on the left-hand side pulls roll back towards zero
    assert g[3] > 0


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-3, 3))
def test_restoring_yaw_moment_zero(phi, theta, psi):
    assert restoring_vector(MODEL, (phi, theta, psi))[5] == 0.0


def test_control_force_examples():
    assert np.array_equal(control_force(MODEL, ControlInput(0, 0, 0), 1.5), np.zeros(6))
    assert np.array_equal(control_force(MODEL, ControlInput(0, 0.3, -0.2), 0.0), np.zeros(6))
    assert np.array_equal(input_matrix(MODEL, 1.2) @ [10, 0, 0], [10, 0, 0, 0, 0, 0])
    assert np.array_equal(control_force(MODEL, ControlInput(0.5, 0, 0), 1.0), [10, 0, 0, 0, 0, 0])


def test_positive_fins_give_positive_moments():
    tau = control_force(MODEL, ControlInput(0, 0.2, 0.2), 1.5)
    assert tau[5] > 0 and tau[4] > 0


@given(st.floats(0, 2), st.floats(0, 1), st.floats(-0.5, 0.5), st.floats(0, 1), st.floats(-0.5, 0.5),
       st.floats(-2, 2), st.floats(-2, 2))
def test_control_force_linear(u_r, n1, d1, n2, d2, a, b):
    B = input_matrix(MODEL, u_r)
    x1, x2 = np.array([n1, d1, -d1]), np.array([n2, d2, d2])
    np.testing.assert_allclose(B @ (a * x1 + b * x2), a * (B @ x1) + b * (B @ x2), atol=1e-12)


def test_fin_saturation():
    tau = control_force(MODEL, ControlInput(2.0, 5.0, -5.0), 1.0)
    limit = MODEL.fin_limit_rad
    np.testing.assert_allclose(tau, input_matrix(MODEL, 1.0) @ [20.0, limit, -limit])


def test_rest_acceleration(frozen):
    a = acceleration(MODEL, np.zeros(6), (0, 0, 0), ControlInput())
    np.testing.assert_allclose(a, frozen["rest_acceleration"], atol=1e-15)
    assert a[2] < 0


@given(anything, st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_acceleration_satisfies_equation_of_motion(nu, phi, theta, n, dr, ds):
    ctrl = ControlInput(n, dr, ds)
    att = (phi, theta, 0.0)
    a = acceleration(MODEL, nu, att, ctrl)
    lhs = mass_matrix(MODEL) @ a + coriolis_matrix(MODEL, nu) @ nu + damping_matrix(MODEL, nu) @ nu \
        + restoring_vector(MODEL, att)
    tau = control_force(MODEL, ctrl, nu[0])
    assert np.max(np.abs(lhs - tau)) <= 1e-10 * max(1.0, np.max(np.abs(tau)), np.max(np.abs(lhs)))


def test_thrust_limit_balances_drag_at_two_metres_per_second():
    assert MODEL.thrust_max_N == pytest.approx(-(MODEL.X_u * 2 + MODEL.X_uu * 4))


def test_default_file_matches_dataclass():
    assert load_coefficients(default_coefficient_file()) == MODEL


def test_coefficient_file_errors(tmp_path):
    f = tmp_path / "bad.coef"
    f.write_text("X_u = -6\nX_u = -7\n")
    with pytest.raises(ConfigError, match="duplicate"):
        load_coefficients(f)
    f.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_coefficients(f)
    f.write_text("X_u = fast\n")
    with pytest.raises(ConfigError):
        load_coefficients(f)
    f.write_text("I_y = -5  # negative inertia\n")
    with pytest.raises(NonPositiveDefinite):
        load_coefficients(f)


def test_sway_quadratic_alias(tmp_path):
    f = tmp_path / "alias.coef"
    f.write_text("X_vv = -70\n")
    assert load_coefficients(f).Y_vv == -70


@pytest.mark.parametrize("change", [{"X_u": 1.0}, {"M_qq": 0.5}, {"buoyancy_N": 170.0}, {"X_u": float("nan")}])
def test_model_validation(change):
    with pytest.raises(ConfigError):
        HydroModel(**change)
