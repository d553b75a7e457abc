import math

import numpy as np
import pytest

from cstrid.acceptance import analytic_response, filter_response
from cstrid.filters import (
    bandpass_output,
    eta_from_theta,
    filter_rhs,
    initial_filter_state,
    lowpass_rhs,
    regressor,
)
from cstrid.integrate import integrate_fixed, rk4_step
from cstrid.plant import REFERENCE_PARAMS, plant_rhs, theta_from_physical, tin_signal, tw_signal

ONE_MINUS_INV_E = 0.6321205588285576784


def _lowpass_trace(inp, t1, h=1e-3, lam=1.0):
    def f(t, x):
        return np.array([lowpass_rhs(x[0], lam, inp(t))])

    ts, xs, x, t = [0.0], [0.0], np.zeros(1), 0.0
    while t < t1 - 1e-12:
        x = rk4_step(f, t, x, h)
        t += h
        ts.append(t)
        xs.append(x[0])
    return np.array(ts), np.array(xs)


def test_lowpass_zero_input_stays_zero():
    t, x = _lowpass_trace(lambda t: 0.0, 1.0)
    assert np.all(x == 0)


def test_lowpass_step_response():
    x = integrate_fixed(lambda t, x: np.array([lowpass_rhs(x[0], 1.0, 1.0)]), [0.0], 0.0, 1.0, 1e-3)
    assert x[0] == pytest.approx(ONE_MINUS_INV_E, rel=1e-10)


def test_bandpass_step_response_is_decaying_exponential():
    t, x = _lowpass_trace(lambda t: 1.0, 3.0)
    out = np.array([bandpass_output(xi, 1.0, 1.0) for xi in x])
    assert out[0] == 1.0
    np.testing.assert_allclose(out, np.exp(-t), atol=1e-12)


def test_bandpass_kills_constants_and_differentiates_ramps():
    t, x = _lowpass_trace(lambda t: 5.0, 20.0)
    assert abs(bandpass_output(x[-1], 1.0, 5.0)) < 1e-7
    t, x = _lowpass_trace(lambda t: t, 20.0)
    assert bandpass_output(x[-1], 1.0, t[-1]) == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("bandpass", [False, True])
@pytest.mark.parametrize("omega", [0.5, 2.0])
def test_frequency_response_matches_analytic(bandpass, omega):
    g, ph = filter_response(1.0, omega, bandpass)
    g0, ph0 = analytic_response(1.0, omega, bandpass)
    assert abs(g - g0) / g0 < 1e-3
    assert abs(ph - ph0) < 1e-3
    if not bandpass:
        assert g0 == pytest.approx(1.0 / math.sqrt(1.0 + omega**2))


def test_regressor_from_rest():
    xf = initial_filter_state(0.5, 120.0, 297.0, 210.0, "zero")
    phi = np.empty(5)
    y = regressor(0.0, xf, 0.5, 120.0, 297.0, 210.0, 1.0, phi)
    assert phi.tolist() == [0.0, 0.0, -0.5, 0.0, 0.0]
    assert y == -120.0


def test_matched_initial_state_zeroes_bandpass_outputs():
    xf = initial_filter_state(0.5, 120.0, 297.0, 210.0)
    phi = np.empty(5)
    y = regressor(0.0, xf, 0.5, 120.0, 297.0, 210.0, 1.0, phi)
    assert y == 0.0 and phi[2] == 0.0
    with pytest.raises(ValueError):
        initial_filter_state(0.5, 120.0, 297.0, 210.0, "other")


def test_eta_from_theta():
    eta = eta_from_theta(theta_from_physical(REFERENCE_PARAMS))
    np.testing.assert_allclose(eta, [-124.1667, 1, -12.41667, 0.3020833, -12.41667], rtol=1e-6)
    assert eta_from_theta(np.array([1.0, 1, 1, 1, 9])).tolist() == [1, 1, 1, 1, 1]
    assert eta[0] / eta[2] == pytest.approx(10.0)
    assert eta[4] == eta[1] * eta[2]


def _plant_and_filters(mode, t1=20.0, h=1e-3):
    """Integrate (C_A, T, filter bank) alone and return t, y - eta'phi and phi1."""
    theta = theta_from_physical(REFERENCE_PARAMS).as_array()
    eta = eta_from_theta(theta)
    k0, lam = REFERENCE_PARAMS.k0, 1.0
    C_A0, T0 = 0.5, 120.0
    x = np.concatenate([[C_A0, T0], initial_filter_state(C_A0, T0, tin_signal(0.0),
                                                         tw_signal(0.0) - T0, mode)])

    def f(t, x, T_in):
        out = np.empty(7)
        T_w = tw_signal(t)
        out[0], out[1] = plant_rhs(x[0], x[1], T_in, T_w, theta, k0)
        filter_rhs(x[2:], x[0], x[1], T_in, T_w - x[1], lam, out[2:])
        return out

    def residual(t, x):
        phi = np.empty(5)
        T_in, T_w = tin_signal(t), tw_signal(t)
        y = regressor(t, x[2:], x[0], x[1], T_in, T_w - x[1], lam, phi)
        return y - eta @ phi, phi[0]

    n = int(round(t1 / h))
    ts, rs, p1 = [0.0], *([v] for v in residual(0.0, x))
    for k in range(n):
        a = k * h
        T_in = tin_signal(a + 0.5 * h)
        x = rk4_step(lambda t, s: f(t, s, T_in), a, x, h)
        r, q = residual((k + 1) * h, x)
        ts.append((k + 1) * h)
        rs.append(r)
        p1.append(q)
    return np.array(ts), np.array(rs), np.array(p1)


@pytest.fixture(scope="module")
def traces():
    return {mode: _plant_and_filters(mode) for mode in ("zero", "matched")}


def test_phi1_closed_form_and_monotone(traces):
    t, _, phi1 = traces["matched"]
    np.testing.assert_allclose(phi1, 1 - np.exp(-t), atol=1e-15)
    assert np.all(np.diff(phi1) > 0)
    assert np.all((phi1 >= 0) & (phi1 < 1))


def test_residual_from_rest_decays_at_filter_rate(traces):
    t, r, _ = traces["zero"]
    theta = theta_from_physical(REFERENCE_PARAMS).as_array()
    # closed form of the transient left by starting the filters at rest
    predicted = np.exp(-t) * (theta[2] * 0.5 - 120.0)
    np.testing.assert_allclose(r, predicted, atol=1e-6)
    sel = t >= 10.0
    slope = np.polyfit(t[sel], np.log(np.abs(r[sel])), 1)[0]
    assert slope <= -0.9


def test_matched_residual_is_zero(traces):
    _, r, _ = traces["matched"]
    assert np.max(np.abs(r)) < 1e-8
