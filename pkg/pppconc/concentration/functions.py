"""Test-function classes and PPP empirical-process integrals.

A class is a finite list of descriptors mapping [0,1] into [-1,1]. Each
descriptor knows its compensator int s dLambda and its second moment
int s^2 dLambda, in closed form for Fourier-defined models.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from typing import Annotated, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pppconc.pointprocess import IntensityModel, PointPattern, SampleSet
from pppconc.quadrature import integrate_values, panel_count, simpson_grid
from shared.config import get_settings
from shared.errors import DomainError

logger = logging.getLogger("pppconc.concentration")

SQRT2 = math.sqrt(2.0)
FloatArray = NDArray[np.float64]


def _integrate_against(model: IntensityModel, fn: Callable[[FloatArray], FloatArray]) -> float:
    panels = panel_count()
    t = simpson_grid(panels)
    return float(integrate_values(fn(t) * model.values_on_grid(panels)))


class ScaledTrig(BaseModel):
    """amplitude * cos(2 pi j t) for j > 0, amplitude * sin(2 pi |j| t) for j < 0,
    the constant amplitude for j = 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["scaled-trig"] = "scaled-trig"
    j: int
    amplitude: float = Field(default=1.0, ge=-1.0, le=1.0)

    def evaluate(self, t: ArrayLike) -> FloatArray:
        x = np.asarray(t, dtype=np.float64)
        if self.j == 0:
            return np.full(x.shape, self.amplitude)
        if self.j > 0:
            return self.amplitude * np.cos(2.0 * np.pi * self.j * x)
        return self.amplitude * np.sin(2.0 * np.pi * (-self.j) * x)

    def compensator(self, model: IntensityModel) -> float:
        beta = model.fourier_coeffs(abs(self.j))
        if beta is None:
            return _integrate_against(model, self.evaluate)
        if self.j == 0:
            return self.amplitude * beta[0]
        # s = amplitude * phi_j / sqrt2
        return self.amplitude * beta[self.j] / SQRT2

    def second_moment(self, model: IntensityModel) -> float:
        if self.j == 0:
            return self.amplitude**2 * model.total_mass
        beta = model.fourier_coeffs(2 * abs(self.j))
        if beta is None:
            return _integrate_against(model, lambda t: self.evaluate(t) ** 2)
        sign = 1.0 if self.j > 0 else -1.0
        return self.amplitude**2 * (beta[0] + sign * beta[2 * abs(self.j)] / SQRT2) / 2.0

    def sup_norm(self) -> float:
        return abs(self.amplitude)

    def negated(self) -> ScaledTrig:
        return ScaledTrig(j=self.j, amplitude=-self.amplitude)


class ConstantFn(BaseModel):
    """s = c."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant"] = "constant"
    c: float = Field(ge=-1.0, le=1.0)

    def evaluate(self, t: ArrayLike) -> FloatArray:
        return np.full(np.shape(t), self.c)

    def compensator(self, model: IntensityModel) -> float:
        return self.c * model.total_mass

    def second_moment(self, model: IntensityModel) -> float:
        return self.c**2 * model.total_mass

    def sup_norm(self) -> float:
        return abs(self.c)

    def negated(self) -> ConstantFn:
        return ConstantFn(c=-self.c)


class StepFn(BaseModel):
    """Piecewise-constant: ``levels[i]`` on [breakpoints[i-1], breakpoints[i])."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["step"] = "step"
    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    @model_validator(mode="after")
    def _check_shape(self) -> StepFn:
        if len(self.levels) != len(self.breakpoints) + 1:
            raise ValueError("a step function needs one more level than breakpoints")
        edges = np.asarray(self.breakpoints, dtype=np.float64)
        if edges.size and (edges[0] <= 0.0 or edges[-1] >= 1.0 or np.any(np.diff(edges) <= 0)):
            raise ValueError("breakpoints must be strictly increasing inside (0,1)")
        if any(abs(v) > 1.0 for v in self.levels):
            raise ValueError("step levels must lie in [-1,1]")
        return self

    def evaluate(self, t: ArrayLike) -> FloatArray:
        x = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right")
        return np.asarray(self.levels, dtype=np.float64)[idx]

    def _piece_masses(self, model: IntensityModel) -> FloatArray:
        edges = np.concatenate([[0.0], self.breakpoints, [1.0]])
        cumulative = np.asarray(model.cumulative_mass(edges), dtype=np.float64)
        return np.diff(cumulative)

    def compensator(self, model: IntensityModel) -> float:
        return float(np.dot(self.levels, self._piece_masses(model)))

    def second_moment(self, model: IntensityModel) -> float:
        return float(np.dot(np.square(self.levels), self._piece_masses(model)))

    def sup_norm(self) -> float:
        return max(abs(v) for v in self.levels)

    def negated(self) -> StepFn:
        return StepFn(breakpoints=self.breakpoints, levels=tuple(-v for v in self.levels))


FunctionDescriptor = Annotated[ScaledTrig | ConstantFn | StepFn, Field(discriminator="kind")]


class FunctionClass(BaseModel):
    """A finite class of functions [0,1] -> [-1,1]."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    members: tuple[FunctionDescriptor, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_sup_norm(self) -> FunctionClass:
        grid = np.linspace(0.0, 1.0, get_settings().nonneg_check_points)
        for member in self.members:
            if member.sup_norm() > 1.0 or float(np.max(np.abs(member.evaluate(grid)))) > 1.0:
                raise ValueError(f"member {member!r} leaves [-1,1]")
        return self

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_symmetric(self) -> bool:
        """True when -s belongs to the class for every member s."""
        present = set(self.members)
        return all(m.negated() in present for m in self.members)

    @property
    def constant_singleton(self) -> float | None:
        """The level c when the class is {s = c} with c > 0."""
        if self.size != 1:
            return None
        only = self.members[0]
        if isinstance(only, ConstantFn) and only.c > 0:
            return only.c
        if isinstance(only, ScaledTrig) and only.j == 0 and only.amplitude > 0:
            return only.amplitude
        return None

    def evaluate_matrix(self, points: ArrayLike) -> FloatArray:
        """Member values with rows over members and columns over points."""
        x = np.asarray(points, dtype=np.float64).ravel()
        if not x.size:
            return np.zeros((self.size, 0))
        return np.stack([m.evaluate(x) for m in self.members])

    def compensators(self, model: IntensityModel) -> FloatArray:
        return np.array([m.compensator(model) for m in self.members])

    def second_moments(self, model: IntensityModel) -> FloatArray:
        return np.array([m.second_moment(model) for m in self.members])

    @classmethod
    def symmetric_trig(cls, max_freq: int, constants: bool = True) -> FunctionClass:
        """{+-cos(2 pi j t), +-sin(2 pi j t) : 1 <= j <= max_freq} plus +-1."""
        members: list[ScaledTrig | ConstantFn | StepFn] = []
        for j in range(1, max_freq + 1):
            for freq in (j, -j):
                members.extend([ScaledTrig(j=freq), ScaledTrig(j=freq, amplitude=-1.0)])
        if constants:
            members.extend([ConstantFn(c=1.0), ConstantFn(c=-1.0)])
        return cls(members=tuple(members))

    @classmethod
    def singleton(cls, member: ScaledTrig | ConstantFn | StepFn) -> FunctionClass:
        return cls(members=(member,))


def centered_integral(
    s: ScaledTrig | ConstantFn | StepFn,
    pattern: PointPattern,
    model: IntensityModel,
) -> float:
    """I(s) = sum_{x in pattern} s(x) - int s dLambda."""
    return float(np.sum(s.evaluate(pattern.points))) - s.compensator(model)


def sn_statistic(
    s_tuple: Sequence[ScaledTrig | ConstantFn | StepFn],
    samples: SampleSet,
    models: Sequence[IntensityModel],
) -> float:
    """S_n(s) = I^1(s_1) + ... + I^n(s_n) over the patterns of ``samples``."""
    if len(s_tuple) != samples.n or len(models) != samples.n:
        raise DomainError(
            f"need one function and one model per pattern (n={samples.n}, "
            f"got {len(s_tuple)} functions, {len(models)} models)"
        )
    return sum(
        centered_integral(s, pattern, model)
        for s, pattern, model in zip(s_tuple, samples.patterns, models, strict=True)
    )


def wimpy_variance(function_class: FunctionClass, model: IntensityModel) -> float:
    """V = max over members of int s^2 dLambda (Campbell)."""
    return float(np.max(function_class.second_moments(model)))
