import math

import numpy as np
import pytest
from numba import njit

from cstrid.integrate import NonFiniteStateError, integrate_fixed, rk4_step, rk4_step_jit


def test_zero_derivative_leaves_state():
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros(3), 0.0, x, 0.5), x)


def test_single_step_decay():
    x = rk4_step(lambda t, x: -x, 0.0, np.array([1.0]), 0.1)
    # 1 - h + h^2/2 - h^3/6 + h^4/24 at h = 0.1
    assert x[0] == pytest.approx(0.9048375, abs=1e-15)
    assert abs(x[0] - math.exp(-0.1)) < 1e-7


def test_global_order_four():
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    errs = [abs(integrate_fixed(lambda t, x: -x, [1.0], 0.0, 1.0, h)[0] - math.exp(-1)) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) <= 0.1


def test_time_dependent_rhs():
    x = integrate_fixed(lambda t, x: np.array([math.cos(t)]), [0.0], 0.0, 2.0, 0.01)
    assert x[0] == pytest.approx(math.sin(2.0), abs=1e-9)


def test_last_step_is_shortened():
    x = integrate_fixed(lambda t, x: np.ones(1), [0.0], 0.0, 1.05, 0.1)
    assert x[0] == pytest.approx(1.05)


def test_nonfinite_stage_names_component():
    def f(t, x):
        return np.array([0.0, math.inf if t > 0 else 0.0])

    with pytest.raises(NonFiniteStateError) as info:
        rk4_step(f, 0.0, np.zeros(2), 0.1, names=("a", "b"))
    assert info.value.component == "b" and info.value.stage == "stage 2"


@njit
def _decay(t, x, rate):
    return -rate * x


@njit
def _blowup(t, x, dummy):
    out = x.copy()
    out[1] = np.nan
    return out


def test_jitted_step_matches_python_step():
    x0 = np.array([1.0, 2.0])
    a, stage, idx = rk4_step_jit(_decay, 0.0, x0, 0.1, (2.0,))
    b = rk4_step(lambda t, x: -2.0 * x, 0.0, x0, 0.1)
    assert stage == 0 and idx == -1
    np.testing.assert_array_equal(a, b)
    x, stage, idx = rk4_step_jit(_blowup, 0.0, x0, 0.1, (0.0,))
    assert (stage, idx) == (1, 1)
    np.testing.assert_array_equal(x, x0)
