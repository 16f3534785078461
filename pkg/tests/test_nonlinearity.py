import numpy as np
import pytest
from scipy.integrate import quad

from plapgraph.nonlinearity import Nonlinearity


def test_power_values(path4):
    nl = Nonlinearity.power(path4[1], 3.0, 5.0, a=[1.0, 2.0])
    t = np.array([2.0, -1.0])
    np.testing.assert_array_equal(nl.f(t), [16.0, 0.0])
    np.testing.assert_allclose(nl.F(t), [32.0 / 5.0, 0.0])
    assert nl.theta == 4.0


def test_power_hypotheses(path3):
    checks = Nonlinearity.power(path3[1], 3.0, 5.0).check_hypotheses()
    assert checks["all"]


def test_ar_needs_theta_below_q(path3):
    # q F = f s exactly for the power family
    checks = Nonlinearity.power(path3[1], 3.0, 5.0, theta=5.0).check_hypotheses()
    assert not checks["ambrosetti_rabinowitz"]


def test_small_t_check_detects_slow_decay(path3):
    checks = Nonlinearity.power(path3[1], 3.0, 3.1).check_hypotheses()
    assert not checks["small_t"]


@pytest.mark.parametrize("kwargs, match", [
    ({"p": 2.0, "q": 5.0}, "p must exceed 2"),
    ({"p": 3.0, "q": 3.0}, "q must exceed p"),
    ({"p": 3.0, "q": 5.0, "theta": 3.0}, "theta"),
    ({"p": 3.0, "q": 5.0, "a": 0.0}, "positive"),
])
def test_rejects(path3, kwargs, match):
    with pytest.raises(ValueError, match=match):
        Nonlinearity.power(path3[1], **kwargs)


def test_exponential_beta_range(path3):
    with pytest.raises(ValueError, match="beta"):
        Nonlinearity.exponential(path3[1], 3.0, 5.0, beta=1.5)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.7, 6.0])
def test_exponential_primitive_matches_quad(path3, t):
    nl = Nonlinearity.exponential(path3[1], 3.0, 5.0, beta=1.2)
    ref, _ = quad(lambda s: s ** 4 * np.exp(s ** 1.2), 0.0, t, epsabs=0, epsrel=1e-13)
    assert nl.F(np.array([t]))[0] == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_exponential_capped_tail(path3):
    nl = Nonlinearity.exponential(path3[1], 3.0, 5.0, beta=1.0, cap=2.0)
    ref, _ = quad(lambda s: s ** 4 * np.exp(min(s, 2.0)), 0.0, 3.0, epsrel=1e-13, points=[2.0])
    assert nl.F(np.array([3.0]))[0] == pytest.approx(ref, rel=1e-12)
    assert np.isfinite(nl.f(np.array([1e6]))[0])


def test_exponential_hypotheses(path3):
    assert Nonlinearity.exponential(path3[1], 3.0, 5.0, beta=1.2).check_hypotheses()["all"]
