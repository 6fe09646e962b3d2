"""Shared fixtures."""

import math

import pytest

from pppconc.pointprocess import (
    AnalyticDecayIntensity,
    ConstantIntensity,
    FourierIntensity,
    SobolevDecayIntensity,
)


@pytest.fixture
def const5() -> ConstantIntensity:
    return ConstantIntensity(5.0)


@pytest.fixture
def const2() -> ConstantIntensity:
    return ConstantIntensity(2.0)


@pytest.fixture
def cosine_model() -> FourierIntensity:
    """lambda(t) = 2 + cos(2 pi t), i.e. beta_0 = 2 and beta_1 = 1/sqrt2."""
    return FourierIntensity.from_terms({0: 2.0, 1: 1.0 / math.sqrt(2.0)})


@pytest.fixture
def sobolev_small() -> SobolevDecayIntensity:
    return SobolevDecayIntensity(p=2.0, a=0.25, base=1.0)


@pytest.fixture
def analytic_model() -> AnalyticDecayIntensity:
    return AnalyticDecayIntensity(rho=1.0, a=1.0, base=2.0)
