"""
Parameters and driving shapes shared by all solvers.

Units: hbar = 1 and the driving frequency Omega sets the energy scale, so
energies are in units of hbar*Omega and times in units of 1/Omega.

Only the symmetrized Hamiltonian

    H(t) = 1/2 (eps0 - A f(t)) sigma_z + Delta/2 sigma_x

is used numerically. The diagonal gauge (eps0, Delta/2; Delta/2, A f(t)) is
available through ``asymmetric_hamiltonian`` for inspection only.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple, Union

import numpy as np

from src.core.errors import ParameterError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

DEFAULT_MAX_HARMONIC = 16

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class DrivingShape:
    """
    Zero-mean periodic drive f(t) = sum_k a_k cos(k W t) + b_k sin(k W t).

    ``harmonics`` holds (k, a_k, b_k) triples with k >= 1; the amplitude A is
    applied by the Hamiltonian, so the coefficients are dimensionless.
    """

    harmonics: Tuple[Tuple[int, float, float], ...]
    omega: float = 1.0
    max_harmonic: int = DEFAULT_MAX_HARMONIC
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not self.harmonics:
            raise ParameterError("driving shape needs at least one harmonic")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ParameterError(f"omega must be positive, got {self.omega}")

        seen = set()
        for k, a, b in self.harmonics:
            if int(k) != k or k < 1:
                raise ParameterError(f"harmonic index must be a positive integer, got {k} (no k=0 term allowed)")
            if k > self.max_harmonic:
                raise ParameterError(f"harmonic index {k} exceeds cap {self.max_harmonic}")
            if k in seen:
                raise ParameterError(f"harmonic index {k} given twice")
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ParameterError(f"non-finite coefficient for harmonic {k}")
            seen.add(k)

        normalized = tuple(sorted((int(k), float(a), float(b)) for k, a, b in self.harmonics))
        object.__setattr__(self, "harmonics", normalized)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def _arrays(self):
        k = np.array([h[0] for h in self.harmonics], dtype=float)
        a = np.array([h[1] for h in self.harmonics])
        b = np.array([h[2] for h in self.harmonics])
        return k, a, b

    def __call__(self, t: ArrayLike) -> ArrayLike:
        k, a, b = self._arrays()
        phase = np.multiply.outer(np.asarray(t, dtype=float), k * self.omega)
        result = np.cos(phase) @ a + np.sin(phase) @ b
        return float(result) if np.ndim(result) == 0 else result

    def integral(self, t: ArrayLike) -> ArrayLike:
        """F(t) = int_0^t f(t') dt', closed form and T-periodic"""
        k, a, b = self._arrays()
        kw = k * self.omega
        phase = np.multiply.outer(np.asarray(t, dtype=float), kw)
        result = np.sin(phase) @ (a / kw) + (1.0 - np.cos(phase)) @ (b / kw)
        return float(result) if np.ndim(result) == 0 else result

    def derivative(self, t: ArrayLike) -> ArrayLike:
        k, a, b = self._arrays()
        kw = k * self.omega
        phase = np.multiply.outer(np.asarray(t, dtype=float), kw)
        result = np.cos(phase) @ (b * kw) - np.sin(phase) @ (a * kw)
        return float(result) if np.ndim(result) == 0 else result

    def extrema(self, samples: int = 4096) -> Tuple[float, float]:
        """(min f, max f) over one period, sampled"""
        values = self(np.linspace(0.0, self.period, samples, endpoint=False))
        return float(values.min()), float(values.max())

    def shifted(self, t0: float) -> "DrivingShape":
        """The same drive with its time origin moved: f'(t) = f(t + t0)"""
        harmonics = []
        for k, a, b in self.harmonics:
            c, s = math.cos(k * self.omega * t0), math.sin(k * self.omega * t0)
            harmonics.append((k, a * c + b * s, b * c - a * s))
        return DrivingShape(tuple(harmonics), self.omega, self.max_harmonic, f"{self.name}+{t0:g}")

    def to_triples(self):
        return [list(h) for h in self.harmonics]


PRESETS: Dict[str, Tuple[Tuple[int, float, float], ...]] = {
    "cos": ((1, 1.0, 0.0),),
    "f0": ((1, 1.0, 0.0),),
    "f1": ((1, 1.0, 0.0), (3, 0.1, 0.0)),
    "f2": ((1, 1.0, 0.0), (2, 1.0, 0.0)),
    "f3": ((1, 0.0, 1.0), (2, 0.0, 1.0)),
}


def preset_shape(name: str, omega: float = 1.0) -> DrivingShape:
    """Named drives: cos (= f0), f1, f2, f3"""
    if name not in PRESETS:
        raise ParameterError(f"unknown drive preset {name!r}; choose from {sorted(PRESETS)}")
    return DrivingShape(PRESETS[name], omega, name=name)


def shape_from_triples(triples: Iterable, omega: float = 1.0) -> DrivingShape:
    return DrivingShape(tuple(tuple(t) for t in triples), omega)


def shape_symmetry(shape: DrivingShape) -> str:
    """
    'symmetric' when f(t) = f(-t) (pure cosines), 'antisymmetric' when
    f(t) = -f(-t) (pure sines), otherwise 'none'.
    """
    if all(b == 0.0 for _, _, b in shape.harmonics):
        return "symmetric"
    if all(a == 0.0 for _, a, _ in shape.harmonics):
        return "antisymmetric"
    return "none"


@dataclass(frozen=True)
class QubitParams:
    """Static detuning eps0, tunnel splitting Delta, drive amplitude A"""

    epsilon0: float
    delta: float
    amplitude: float

    def __post_init__(self):
        for name in ("epsilon0", "delta", "amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")

    def replace(self, **changes) -> "QubitParams":
        values = {"epsilon0": self.epsilon0, "delta": self.delta, "amplitude": self.amplitude}
        values.update(changes)
        return QubitParams(**values)

    @property
    def splitting(self) -> float:
        return math.hypot(self.epsilon0, self.delta)


@dataclass(frozen=True)
class BathParams:
    """
    Ohmic bath: dissipation strength alpha, inverse temperature beta and the
    mixing angle theta of the coupling X = sigma_x cos(theta) + sigma_z sin(theta).
    """

    alpha: float
    beta: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.beta > 0):
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if not (0.0 <= self.theta <= math.pi / 2 + 1e-12):
            raise ParameterError(f"theta must lie in [0, pi/2], got {self.theta}")

    @classmethod
    def from_temperature(cls, alpha: float, temperature: float, theta: float = 0.0) -> "BathParams":
        if temperature <= 0:
            raise ParameterError(f"temperature must be > 0, got {temperature}")
        return cls(alpha, 1.0 / temperature, theta)

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def coupling_operator(self) -> np.ndarray:
        return coupling_operator(self.theta)


def coupling_operator(theta: float) -> np.ndarray:
    # exact endpoints keep sigma_x / sigma_z free of 1e-17 admixtures
    if theta == 0.0:
        return SIGMA_X.copy()
    if theta == math.pi / 2:
        return SIGMA_Z.copy()
    return math.cos(theta) * SIGMA_X + math.sin(theta) * SIGMA_Z


def parse_coupling(spec: str) -> float:
    """'x' -> 0, 'z' -> pi/2, 'mixed:<theta>' -> theta (radians)"""
    spec = spec.strip().lower()
    if spec == "x":
        return 0.0
    if spec == "z":
        return math.pi / 2
    if spec.startswith("mixed:"):
        try:
            theta = float(spec.split(":", 1)[1])
        except ValueError as e:
            raise ParameterError(f"bad mixing angle in coupling {spec!r}") from e
        if not 0.0 <= theta <= math.pi / 2:
            raise ParameterError(f"mixing angle must lie in [0, pi/2], got {theta}")
        return theta
    raise ParameterError(f"coupling must be 'x', 'z' or 'mixed:<theta>', got {spec!r}")


def evaluate_driving(shape: DrivingShape, t: ArrayLike) -> ArrayLike:
    return shape(t)


def driving_integral(shape: DrivingShape, t: ArrayLike) -> ArrayLike:
    return shape.integral(t)


def symmetrized_hamiltonian(q: QubitParams, shape: DrivingShape, t: ArrayLike) -> np.ndarray:
    """H(t); for array t the result has shape t.shape + (2, 2)"""
    bias = 0.5 * (q.epsilon0 - q.amplitude * np.asarray(shape(t)))
    return np.multiply.outer(bias, SIGMA_Z) + 0.5 * q.delta * SIGMA_X


def asymmetric_hamiltonian(q: QubitParams, shape: DrivingShape, t: float) -> np.ndarray:
    """Diagonal gauge of the same problem; differs from H(t) by a multiple of 1"""
    return np.array([
        [q.epsilon0, q.delta / 2],
        [q.delta / 2, q.amplitude * shape(t)],
    ], dtype=complex)


def adiabatic_energies(q: QubitParams, shape: DrivingShape, t: ArrayLike) -> np.ndarray:
    """Instantaneous eigenvalues E-(t), E+(t) of H(t); last axis has length 2"""
    bias = q.epsilon0 - q.amplitude * np.asarray(shape(t))
    half = 0.5 * np.hypot(bias, q.delta)
    return np.stack([-half, half], axis=-1)


def static_hamiltonian(q: QubitParams) -> np.ndarray:
    return 0.5 * q.epsilon0 * SIGMA_Z + 0.5 * q.delta * SIGMA_X


def excited_state(q: QubitParams) -> np.ndarray:
    """Upper eigenvector of the undriven qubit; |up> when eps0 = Delta = 0"""
    if q.epsilon0 == 0.0 and q.delta == 0.0:
        return np.array([1.0, 0.0], dtype=complex)
    _, vecs = np.linalg.eigh(static_hamiltonian(q))
    return vecs[:, 1]
