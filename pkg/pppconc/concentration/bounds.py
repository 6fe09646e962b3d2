"""Closed-form concentration bounds for suprema of centered PPP integrals.

Tail bounds accept ``log=True`` to return the natural log of the bound, which
stays finite far into the tail where the bound itself underflows.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from shared.errors import DomainError

# Fixed constant of the integrated bound's first exponential
C2 = 1.0 / 6.0
DEFAULT_C1 = 4.0
DEFAULT_C3 = 1.0 / 42.0


def _finish(log_value: float, log: bool) -> float:
    return log_value if log else math.exp(log_value)


def _check_tail_args(x: float, upsilon: float) -> None:
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if upsilon <= 0:
        raise DomainError(f"upsilon must be positive, got {upsilon}")


def h(x: float) -> float:
    """(1+x) log(1+x) - x."""
    if x < -1:
        raise DomainError(f"h is defined for x >= -1, got {x}")
    if x == -1:
        return 1.0
    return (1.0 + x) * math.log1p(x) - x


def kappa(eps: float) -> float:
    """5/4 + 32/eps."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return 1.25 + 32.0 / eps


def C_eps(eps: float) -> float:
    """(sqrt(1+eps) - 1) clamped at 1."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return min(math.sqrt(1.0 + eps) - 1.0, 1.0)


def c_eps(eps: float) -> float:
    """2 (1 + 2 eps)."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return 2.0 * (1.0 + 2.0 * eps)


def bound_right_lmgf(t: float, EZ: float, upsilon: float) -> float:
    """Upper bound on log E exp(tZ): t EZ + (t/2) upsilon (exp((e^{2t}-1)/2) - 1)."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    return t * EZ + 0.5 * t * upsilon * math.expm1(math.expm1(2.0 * t) / 2.0)


def bound_left_lmgf(t: float, EZ: float, upsilon: float) -> float:
    """Upper bound on log E exp(-tZ): -t EZ + (upsilon/9)(e^{3t} - 3t - 1)."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    return -t * EZ + upsilon / 9.0 * (math.expm1(3.0 * t) - 3.0 * t)


def bound_right_log(x: float, upsilon: float, *, log: bool = False) -> float:
    """P(Z >= EZ + x) <= exp(-(x/4) log(1 + 2 log(1 + x/upsilon)))."""
    _check_tail_args(x, upsilon)
    return _finish(-(x / 4.0) * math.log1p(2.0 * math.log1p(x / upsilon)), log)


def bound_right_tail(x: float, upsilon: float, *, log: bool = False) -> tuple[float, float]:
    """(sharp, loose) bounds on P(Z >= EZ + x).

    sharp: exp(-x^2 / (upsilon + sqrt(upsilon^2 + 3 upsilon x) + 3x/2))
    loose: exp(-x^2 / (2 upsilon + 3x))
    """
    _check_tail_args(x, upsilon)
    sq = x * x
    sharp = -sq / (upsilon + math.sqrt(upsilon * upsilon + 3.0 * upsilon * x) + 1.5 * x)
    loose = -sq / (2.0 * upsilon + 3.0 * x)
    return _finish(sharp, log), _finish(loose, log)


def bound_left_tail(
    x: float, upsilon: float, *, log: bool = False
) -> tuple[float, float, float]:
    """(poisson_form, sharp, loose) bounds on P(Z <= EZ - x).

    poisson_form: exp(-(upsilon/9) h(3x/upsilon))
    sharp: exp(-x^2 / (upsilon + sqrt(upsilon^2 + 2 upsilon x) + x))
    loose: exp(-x^2 / (2 upsilon + 2x))
    """
    _check_tail_args(x, upsilon)
    sq = x * x
    poisson_form = -(upsilon / 9.0) * h(3.0 * x / upsilon)
    sharp = -sq / (upsilon + math.sqrt(upsilon * upsilon + 2.0 * upsilon * x) + x)
    loose = -sq / (2.0 * upsilon + 2.0 * x)
    return _finish(poisson_form, log), _finish(sharp, log), _finish(loose, log)


def bound_abs_sup(x: float, eps: float, upsilon0: float, *, log: bool = False) -> float:
    """P(sup|I| >= (1+eps) E sup|I| + x) <= exp(-x^2 / (12 upsilon0 + 2 kappa(eps) x))."""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if upsilon0 < 0:
        raise DomainError(f"upsilon0 must be nonnegative, got {upsilon0}")
    denom = 12.0 * upsilon0 + 2.0 * kappa(eps) * x
    if denom == 0.0:
        return _finish(0.0, log)
    return _finish(-x * x / denom, log)


def bound_integrated(
    eps: float,
    H: float,
    upsilon: float,
    M1: float,
    n: int,
    c1: float = DEFAULT_C1,
    c3: float = DEFAULT_C3,
) -> float:
    """Bound on E[(sup_t nu_n(t)^2 - c(eps) H^2)_+].

    c1 { (upsilon/n) exp(-c2 eps n H^2 / upsilon)
         + M1^2 / (C(eps)^2 n^2) exp(-c3 C(eps) sqrt(eps) n H / M1) }
    """
    for name, value in (("eps", eps), ("H", H), ("upsilon", upsilon), ("M1", M1), ("n", n)):
        if value <= 0:
            raise DomainError(f"{name} must be positive, got {value}")
    big_c = C_eps(eps)
    first = (upsilon / n) * math.exp(-C2 * eps * n * H * H / upsilon)
    second = M1 * M1 / (big_c * big_c * n * n) * math.exp(
        -c3 * big_c * math.sqrt(eps) * n * H / M1
    )
    return c1 * (first + second)


def bound_nu_deviation(y: float, n: int, M1: float, H: float, upsilon: float) -> float:
    """P(sup_t nu_n(t) >= H + y) <= exp(-n y^2 / (2 (2 M1 H + upsilon) + 3 M1 y))."""
    if y < 0:
        raise DomainError(f"y must be nonnegative, got {y}")
    denom = 2.0 * (2.0 * M1 * H + upsilon) + 3.0 * M1 * y
    if denom <= 0:
        raise DomainError("deviation bound needs a positive scale")
    return math.exp(-n * y * y / denom)


class BallConstants(NamedTuple):
    """Envelope, expectation and variance scales for the unit ball of S_k."""

    M1: float
    H: float
    upsilon: float


def ball_constants(k: int, beta0: float, lambda_l2_norm: float, n: int) -> BallConstants:
    """M1^2 = 2k+1, H^2 = (beta0 v 1)(2k+1)/n, upsilon = sqrt(2k+1) ||lambda|| (beta0 v 1)."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    if beta0 <= 0 or lambda_l2_norm <= 0 or n <= 0:
        raise DomainError("beta0, ||lambda|| and n must be positive")
    dim = 2 * k + 1
    scale = max(beta0, 1.0)
    return BallConstants(
        M1=math.sqrt(dim),
        H=math.sqrt(scale * dim / n),
        upsilon=math.sqrt(dim) * lambda_l2_norm * scale,
    )
