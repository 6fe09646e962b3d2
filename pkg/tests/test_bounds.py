"""Tests for the closed-form concentration bounds."""

import math

import numpy as np
import pytest

from pppconc.concentration import (
    C_eps,
    ball_constants,
    bound_abs_sup,
    bound_integrated,
    bound_left_lmgf,
    bound_left_tail,
    bound_nu_deviation,
    bound_right_lmgf,
    bound_right_log,
    bound_right_tail,
    c_eps,
    h,
    kappa,
)
from shared.errors import DomainError

X_GRID = np.geomspace(1e-3, 1e3, 61)


def test_lmgf_values():
    """Test both log-MGF bounds at hand-computed points."""
    right = bound_right_lmgf(0.1, 0.0, 1.0)
    assert right == pytest.approx(0.05 * (math.exp((math.exp(0.2) - 1.0) / 2.0) - 1.0))

    left = bound_left_lmgf(math.log(2.0) / 3.0, 0.0, 9.0)
    assert left == pytest.approx(1.0 - math.log(2.0))
    assert bound_right_lmgf(0.0, 3.0, 2.0) == 0.0


def test_lmgf_rejects_negative_t():
    """Test the t >= 0 domain."""
    with pytest.raises(DomainError):
        bound_right_lmgf(-0.1, 0.0, 1.0)
    with pytest.raises(DomainError):
        bound_left_lmgf(-0.1, 0.0, 1.0)


def test_right_log_value():
    """Test the logarithmic right tail at x = upsilon."""
    ups = 3.0
    expected = math.exp(-(ups / 4.0) * math.log(1.0 + 2.0 * math.log(2.0)))
    assert bound_right_log(ups, ups) == pytest.approx(expected)


def test_right_tail_values():
    """Test the right tail at upsilon = 1, x = 1."""
    sharp, loose = bound_right_tail(1.0, 1.0)

    assert loose == pytest.approx(math.exp(-0.2))
    assert sharp == pytest.approx(math.exp(-1.0 / 4.5))


def test_tails_equal_one_at_zero():
    """Test that every bound is trivial at x = 0."""
    assert bound_right_log(0.0, 2.0) == 1.0
    assert bound_right_tail(0.0, 2.0) == (1.0, 1.0)
    assert bound_left_tail(0.0, 2.0) == (1.0, 1.0, 1.0)
    assert bound_abs_sup(0.0, 1.0, 2.0) == 1.0


@pytest.mark.parametrize("ups", [0.5, 1.0, 10.0, 1000.0])
def test_right_sharp_below_loose(ups):
    """Test sharp <= loose on a log grid."""
    for x in X_GRID:
        sharp, loose = bound_right_tail(x, ups, log=True)
        assert sharp <= loose + 1e-12


@pytest.mark.parametrize("ups", [0.5, 1.0, 10.0, 1000.0])
def test_left_ordering(ups):
    """Test poisson_form <= sharp <= loose on a log grid."""
    for x in X_GRID:
        poisson_form, sharp, loose = bound_left_tail(x, ups, log=True)
        assert poisson_form <= sharp + 1e-12
        assert sharp <= loose + 1e-12


def test_tails_strictly_decreasing():
    """Test monotonicity in x through the log bounds."""
    right_log = [bound_right_log(x, 2.0, log=True) for x in X_GRID]
    right = [bound_right_tail(x, 2.0, log=True) for x in X_GRID]
    left = [bound_left_tail(x, 2.0, log=True) for x in X_GRID]
    abs_sup = [bound_abs_sup(x, 1.0, 2.0, log=True) for x in X_GRID]

    assert np.all(np.diff(right_log) < 0)
    assert np.all(np.diff(np.array(right), axis=0) < 0)
    assert np.all(np.diff(np.array(left), axis=0) < 0)
    assert np.all(np.diff(abs_sup) < 0)


def test_log_mode_survives_underflow():
    """Test that log bounds stay finite where the bound underflows."""
    assert bound_right_tail(1e6, 1.0)[1] == 0.0
    assert math.isfinite(bound_right_tail(1e6, 1.0, log=True)[1])


def test_tail_domain_checks():
    """Test negative x and nonpositive upsilon."""
    with pytest.raises(DomainError):
        bound_right_tail(-1.0, 1.0)
    with pytest.raises(DomainError):
        bound_left_tail(1.0, 0.0)
    with pytest.raises(DomainError):
        bound_abs_sup(1.0, 1.0, -1.0)


def test_abs_sup_zero_variance():
    """Test the abs-sup bound when upsilon0 = 0."""
    assert bound_abs_sup(2.0, 1.0, 0.0) == pytest.approx(math.exp(-1.0 / kappa(1.0)))


def test_helper_constants():
    """Test h, kappa and the eps constants."""
    assert h(math.e - 1.0) == pytest.approx(1.0)
    assert h(0.0) == 0.0
    assert h(-1.0) == 1.0
    assert kappa(1.0) == 33.25
    assert C_eps(3.0) == pytest.approx(1.0)
    assert C_eps(100.0) == 1.0
    assert c_eps(0.25) == 3.0
    with pytest.raises(DomainError):
        h(-2.0)
    with pytest.raises(DomainError):
        kappa(0.0)


def test_ball_constants():
    """Test the unit-ball scales."""
    assert tuple(ball_constants(0, 0.5, 1.0, 1)) == (1.0, 1.0, 1.0)

    consts = ball_constants(4, 2.0, 1.5, 100)
    assert consts.M1 == 3.0
    assert consts.H == pytest.approx(0.424264, abs=1e-6)
    assert consts.upsilon == pytest.approx(9.0)
    with pytest.raises(DomainError):
        ball_constants(-1, 1.0, 1.0, 1)


def test_ball_threshold_at_quarter():
    """Test c(1/4) H^2 = 3 (beta0 v 1)(2k+1)/n."""
    consts = ball_constants(4, 2.0, 1.5, 100)
    assert c_eps(0.25) * consts.H**2 == pytest.approx(3.0 * 2.0 * 9 / 100)


def test_bound_integrated_decreasing_in_n():
    """Test that the integrated bound shrinks as n grows."""
    values = [bound_integrated(0.25, 0.5, 2.0, 3.0, n) for n in (10, 100, 1000, 10_000)]

    assert all(v > 0 for v in values)
    assert np.all(np.diff(values) < 0)
    with pytest.raises(DomainError):
        bound_integrated(0.25, 0.0, 2.0, 3.0, 10)


def test_bound_nu_deviation():
    """Test the deviation bound at y = 0 and its decay."""
    assert bound_nu_deviation(0.0, 10, 1.0, 0.5, 1.0) == 1.0
    assert bound_nu_deviation(1.0, 10, 1.0, 0.5, 1.0) > bound_nu_deviation(2.0, 10, 1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        bound_nu_deviation(-1.0, 10, 1.0, 0.5, 1.0)
