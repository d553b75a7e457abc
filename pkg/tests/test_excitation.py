import numpy as np
import pytest

from cstrid.excitation import GramAccumulator, gram_rhs, ie_status
from cstrid.integrate import integrate_fixed
from cstrid.linalg import unpack_sym


def _gram(phi_fn, t1, h=0.01):
    def f(t, g):
        out = np.empty(15)
        gram_rhs(phi_fn(t), out)
        return out

    return unpack_sym(integrate_fixed(f, np.zeros(15), 0.0, t1, h), 5)


def test_zero_regressor_never_excites():
    G = _gram(lambda t: np.zeros(5), 3.0)
    s = ie_status(G)
    assert not s.excited and s.lam_min == 0.0


def test_single_direction_is_rank_one():
    e1 = np.eye(5)[0]
    G = _gram(lambda t: e1, 2.0)
    np.testing.assert_allclose(G, 2.0 * np.outer(e1, e1), atol=1e-12)
    assert not ie_status(G).excited


def test_rich_regressor_excites():
    G = _gram(lambda t: np.array([1.0, np.sin(t), np.cos(t), np.sin(2 * t), np.cos(3 * t)]), 10.0)
    s = ie_status(G, 1e-3)
    assert s.excited and s.lam_min > 1e-3


def test_ie_status_thresholds():
    assert ie_status(3 * np.eye(5), 1.0).excited
    assert not ie_status(0.5 * np.eye(5), 1.0).excited
    with pytest.raises(ValueError):
        ie_status(np.eye(5), 0.0)


def test_accumulator_records_first_crossing():
    acc = GramAccumulator(threshold=1.0)
    for t, scale in [(0.0, 0.0), (1.0, 0.5), (2.0, 1.5), (3.0, 4.0)]:
        acc.observe(t, scale * np.eye(5))
    assert acc.crossing_time == 2.0
    assert acc.status().excited and acc.lam_min == 4.0


def test_accumulator_symmetrizes():
    acc = GramAccumulator()
    G = np.eye(5)
    G[0, 1] = 1e-3
    acc.observe(1.0, G)
    np.testing.assert_array_equal(acc.G, acc.G.T)
    assert np.isnan(GramAccumulator().crossing_time_or_nan)
