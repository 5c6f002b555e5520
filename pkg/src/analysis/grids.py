"""
Grid containers shared by sweeps, closed-form patterns and spectra.
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from src.core.errors import ParameterError


def uniform_axis(start: float, stop: float, n: int) -> np.ndarray:
    if n < 1:
        raise ParameterError(f"axis needs at least one point, got {n}")
    if n == 1:
        return np.array([float(start)])
    if not stop > start:
        raise ParameterError(f"axis must be increasing, got [{start}, {stop}]")
    return np.linspace(start, stop, n)


def axis_spacing(axis: np.ndarray) -> float:
    if axis.size < 2:
        raise ParameterError("axis spacing undefined for a single point")
    return float((axis[-1] - axis[0]) / (axis.size - 1))


def _check_axis(name: str, axis: np.ndarray):
    if axis.ndim != 1 or axis.size == 0:
        raise ParameterError(f"{name} axis must be a non-empty 1-d array")
    if axis.size > 1:
        steps = np.diff(axis)
        if np.any(steps <= 0):
            raise ParameterError(f"{name} axis must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ParameterError(f"{name} axis must be uniform")


@dataclass(frozen=True, eq=False)
class PatternGrid:
    """
    P_ex(eps0, A) on a uniform grid; ``values[i, j]`` belongs to
    (eps[i], amp[j]). Failed sweep points are NaN until ``fill_missing``.
    """

    eps: np.ndarray
    amp: np.ndarray
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        _check_axis("eps0", self.eps)
        _check_axis("amplitude", self.amp)
        if self.values.shape != (self.eps.size, self.amp.size):
            raise ParameterError(
                f"values shape {self.values.shape} does not match axes ({self.eps.size}, {self.amp.size})"
            )
        if np.any(np.isinf(self.values)):
            raise ParameterError("pattern values must be finite")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def same_axes(self, other: "PatternGrid") -> bool:
        return (
            self.eps.shape == other.eps.shape
            and self.amp.shape == other.amp.shape
            and np.array_equal(self.eps, other.eps)
            and np.array_equal(self.amp, other.amp)
        )


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """Complex W(tau_eps, tau_A); ``values[i, j]`` belongs to (tau_eps[i], tau_amp[j])"""

    tau_eps: np.ndarray
    tau_amp: np.ndarray
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        _check_axis("tau_eps", self.tau_eps)
        _check_axis("tau_amp", self.tau_amp)
        if self.values.shape != (self.tau_eps.size, self.tau_amp.size):
            raise ParameterError("spectrum values do not match axes")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)
