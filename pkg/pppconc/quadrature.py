"""Composite Simpson quadrature on [0,1] with a half-grid convergence check."""

import logging
from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import simpson

from shared.config import get_settings
from shared.errors import QuadratureError

logger = logging.getLogger("pppconc.quadrature")

FloatArray = NDArray[np.float64]


def panel_count(panels: int | None = None, minimum: int = 0) -> int:
    """Even panel count, at least the configured default and ``minimum``."""
    n = max(panels or get_settings().quadrature_panels, minimum, 2)
    return n + (n % 2)


def simpson_grid(panels: int | None = None) -> FloatArray:
    """Knots of a composite Simpson rule with ``panels`` panels on [0,1]."""
    return np.linspace(0.0, 1.0, panel_count(panels) + 1)


def integrate_values(values: NDArray[np.floating], check: bool = True) -> NDArray[np.float64]:
    """
    Integrate samples taken on ``simpson_grid`` along the last axis.

    With ``check`` the result is compared with Simpson on every other knot;
    a disagreement beyond ``quadrature_rtol`` (relative to the larger of the
    result and the integrand's sup) raises ``QuadratureError``.
    """
    y = np.asarray(values, dtype=np.float64)
    panels = y.shape[-1] - 1
    if panels < 2 or panels % 2:
        raise QuadratureError(f"Simpson needs an even panel count, got {panels}")
    full = np.asarray(simpson(y, dx=1.0 / panels, axis=-1))
    if not check:
        return full
    if panels % 4:
        # half grid would have an odd panel count
        return full

    half = np.asarray(simpson(y[..., ::2], dx=2.0 / panels, axis=-1))
    scale = np.maximum(np.abs(full), np.max(np.abs(y), axis=-1))
    tol = get_settings().quadrature_rtol * np.maximum(scale, np.finfo(np.float64).tiny)
    gap = np.abs(full - half)
    if np.any(gap > tol):
        worst = float(np.max(gap / tol))
        logger.debug(f"Simpson half-grid disagreement {worst:.3g}x tolerance at {panels} panels")
        raise QuadratureError(
            f"composite Simpson did not converge at {panels} panels "
            f"(half-grid gap {float(np.max(gap)):.3e})"
        )
    return full


def integrate(
    f: Callable[[FloatArray], NDArray[np.floating]],
    panels: int | None = None,
    check: bool = True,
) -> float:
    """Integrate a vectorised function over [0,1]."""
    t = simpson_grid(panels)
    return float(integrate_values(f(t), check=check))
