"""
Floquet states of the driven two-level system.

The one-period propagator (monodromy matrix) U(T, 0) is integrated with an
adaptive Runge-Kutta scheme and diagonalized; the Floquet modes

    |Phi_a(t)> = exp(+i eps_a t) U(t, 0) |u_a>,   U(T, 0)|u_a> = exp(-i eps_a T)|u_a>

are sampled on an equidistant grid and Fourier transformed with the
convention |Phi_a(t)> = sum_k exp(-i k W t) c_{a,k}.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur

from src.core.errors import IntegrationError, ParameterError
from src.core.model import DrivingShape, QubitParams
from src.observability.logger import SolverLogger

logger = SolverLogger("floquet")

DEFAULT_TOLERANCE = 1e-10
DEFAULT_SAMPLES = 512
DEFAULT_K_MODES = 64
DEFAULT_K_X = 32
DEGENERACY_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class PeriodPropagation:
    monodromy: np.ndarray        # U(T, 0)
    times: np.ndarray            # t_m = m T / M, m = 0..M-1
    propagators: np.ndarray      # U(t_m, 0), shape (M, 2, 2)
    unitarity_defect: float
    tolerance: float
    evaluations: int


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    """
    Quasienergies (ascending, folded into [-W/2, W/2)) and Floquet modes.

    ``samples[m, :, a]`` is |Phi_a(t_m)>; ``coefficients[k + k_modes, :, a]``
    is c_{a,k} for |k| <= k_modes.
    """

    quasienergies: np.ndarray
    samples: np.ndarray
    coefficients: np.ndarray
    k_modes: int
    omega: float
    unitarity_defect: float
    tolerance: float
    degenerate: bool = False
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.period / self.n_samples

    def mode_at(self, t: float) -> np.ndarray:
        """Columns are |Phi_1(t)>, |Phi_2(t)> rebuilt from the Fourier series"""
        k = np.arange(-self.k_modes, self.k_modes + 1)
        phases = np.exp(-1j * k * self.omega * t)
        return np.tensordot(phases, self.coefficients, axes=(0, 0))

    def overlap_matrix(self) -> np.ndarray:
        """Time-averaged <Phi_a|Phi_b> from the coefficients"""
        return np.einsum("kia,kib->ab", self.coefficients.conj(), self.coefficients)

    def swapped(self) -> "FloquetSolution":
        """Same solution with the two labels exchanged"""
        order = [1, 0]
        return replace(
            self,
            quasienergies=self.quasienergies[order],
            samples=self.samples[:, :, order],
            coefficients=self.coefficients[:, :, order],
        )


@dataclass(frozen=True, eq=False)
class TransitionElements:
    """X_{ab,k} stored as ``elements[k + k_max, a, b]``"""

    elements: np.ndarray
    k_max: int

    def at(self, k: int) -> np.ndarray:
        if abs(k) > self.k_max:
            return np.zeros((2, 2), dtype=complex)
        return self.elements[k + self.k_max]

    def evaluate(self, t: float, omega: float = 1.0) -> np.ndarray:
        """sum_k X_k exp(-i k W t)"""
        k = np.arange(-self.k_max, self.k_max + 1)
        return np.tensordot(np.exp(-1j * k * omega * t), self.elements, axes=(0, 0))


def _rhs_factory(q: QubitParams, shape: DrivingShape):
    eps0, amp, half_delta = q.epsilon0, q.amplitude, 0.5 * q.delta

    def rhs(t, y):
        b = 0.5 * (eps0 - amp * shape(t))
        u0, u1, u2, u3 = y
        return -1j * np.array([
            b * u0 + half_delta * u2,
            b * u1 + half_delta * u3,
            half_delta * u0 - b * u2,
            half_delta * u1 - b * u3,
        ])

    return rhs


def propagate(q: QubitParams, shape: DrivingShape, t_end: float, tol: float = DEFAULT_TOLERANCE) -> np.ndarray:
    """U(t_end, 0) from a single adaptive integration"""
    if t_end == 0:
        return np.eye(2, dtype=complex)
    sol = solve_ivp(
        _rhs_factory(q, shape), (0.0, t_end), np.eye(2, dtype=complex).ravel(),
        method="DOP853", rtol=tol, atol=tol * 1e-2,
    )
    if not sol.success:
        raise IntegrationError(f"propagation failed: {sol.message}", time=float(sol.t[-1]))
    return sol.y[:, -1].reshape(2, 2)


def propagate_period(
    q: QubitParams,
    shape: DrivingShape,
    tol: float = DEFAULT_TOLERANCE,
    samples: int = DEFAULT_SAMPLES,
) -> PeriodPropagation:
    """
    Integrate i dU/dt = H(t) U over one period.

    Returns the monodromy matrix together with U(t_m, 0) at ``samples``
    equidistant times.
    """
    if tol <= 0:
        raise ParameterError(f"tolerance must be > 0, got {tol}")

    period = shape.period
    times = np.arange(samples + 1) * period / samples
    times[-1] = period

    sol = solve_ivp(
        _rhs_factory(q, shape), (0.0, period), np.eye(2, dtype=complex).ravel(),
        method="DOP853", t_eval=times, rtol=tol, atol=tol * 1e-2,
    )
    if not sol.success:
        raise IntegrationError(f"propagation failed: {sol.message}", time=float(sol.t[-1]))

    propagators = sol.y.T.reshape(samples + 1, 2, 2)
    monodromy = propagators[-1]
    defect = float(np.linalg.norm(monodromy.conj().T @ monodromy - np.eye(2)))

    return PeriodPropagation(
        monodromy=monodromy,
        times=times[:-1],
        propagators=propagators[:-1],
        unitarity_defect=defect,
        tolerance=tol,
        evaluations=int(sol.nfev),
    )


def fold_quasienergy(eps: np.ndarray, omega: float = 1.0) -> np.ndarray:
    """Map into the Brillouin zone [-W/2, W/2)"""
    return np.mod(np.asarray(eps) + 0.5 * omega, omega) - 0.5 * omega


def floquet_solve(
    q: QubitParams,
    shape: DrivingShape,
    tol: float = DEFAULT_TOLERANCE,
    samples: int = DEFAULT_SAMPLES,
    k_modes: int = DEFAULT_K_MODES,
) -> FloquetSolution:
    """
    Quasienergies and Floquet modes from the monodromy matrix.

    Schur vectors of U(T, 0) are used as eigenvectors; they are orthonormal
    even when the eigenphases coincide, which happens at coherent
    destruction of tunneling points.
    """
    if samples < 4 or samples & (samples - 1):
        raise ParameterError(f"samples must be a power of two >= 4, got {samples}")
    if samples < 4 * (k_modes + 1):
        raise ParameterError(f"samples={samples} too small for k_modes={k_modes}")

    start_time = time.perf_counter()
    prop = propagate_period(q, shape, tol, samples)
    period, omega = shape.period, shape.omega

    triangular, vectors = schur(prop.monodromy, output="complex")
    eigenvalues = np.diag(triangular)
    quasienergies = fold_quasienergy(-np.angle(eigenvalues) / period, omega)

    order = np.argsort(quasienergies, kind="stable")
    quasienergies = quasienergies[order]
    vectors = vectors[:, order]

    separation = abs(np.angle(eigenvalues[order[0]] * np.conj(eigenvalues[order[1]])))
    degenerate = bool(separation < DEGENERACY_THRESHOLD)
    if degenerate:
        logger.log_diagnostic(
            "quasienergy_degeneracy",
            epsilon0=q.epsilon0, amplitude=q.amplitude, separation=float(separation)
        )

    phases = np.exp(1j * np.multiply.outer(prop.times, quasienergies))      # (M, 2)
    modes = np.einsum("mij,ja->mia", prop.propagators, vectors) * phases[:, None, :]

    spectrum = np.fft.ifft(modes, axis=0)
    k = np.arange(-k_modes, k_modes + 1)
    coefficients = spectrum[k % samples]

    logger.log_stage_complete(
        "floquet_solve",
        {"quasienergies": quasienergies.tolist(), "unitarity_defect": prop.unitarity_defect},
        (time.perf_counter() - start_time) * 1000,
    )

    return FloquetSolution(
        quasienergies=quasienergies,
        samples=modes,
        coefficients=coefficients,
        k_modes=k_modes,
        omega=omega,
        unitarity_defect=prop.unitarity_defect,
        tolerance=tol,
        degenerate=degenerate,
        diagnostics={"phase_separation": float(separation), "evaluations": prop.evaluations},
    )


def transition_elements(sol: FloquetSolution, X: np.ndarray, k_x: int = DEFAULT_K_X) -> TransitionElements:
    """
    X_{ab,k} = (1/T) int_0^T dt exp(i k W t) <Phi_a(t)|X|Phi_b(t)>, |k| <= k_x,
    by discrete Fourier transform of the sampled matrix elements.
    """
    if 2 * k_x + 1 > sol.n_samples:
        raise ParameterError(f"k_x={k_x} needs more than {sol.n_samples} samples")

    sampled = np.einsum("mia,ij,mjb->mab", sol.samples.conj(), X, sol.samples)
    spectrum = np.fft.ifft(sampled, axis=0)
    k = np.arange(-k_x, k_x + 1)
    return TransitionElements(elements=spectrum[k % sol.n_samples], k_max=k_x)


def _match_labels(previous: FloquetSolution, current: FloquetSolution) -> FloquetSolution:
    overlaps = np.abs(np.einsum("kia,kib->ab", previous.coefficients.conj(), current.coefficients))
    if overlaps[0, 1] + overlaps[1, 0] > overlaps[0, 0] + overlaps[1, 1]:
        return current.swapped()
    return current


def quasienergy_scan(
    q: QubitParams,
    shape: DrivingShape,
    amplitudes: Sequence[float],
    tol: float = DEFAULT_TOLERANCE,
    samples: int = DEFAULT_SAMPLES,
    k_modes: int = DEFAULT_K_MODES,
) -> np.ndarray:
    """
    Quasienergies versus drive amplitude, shape (len(amplitudes), 2).

    Labels follow the previous amplitude by maximal mode overlap so curves
    stay continuous through avoided quasienergy crossings.
    """
    result = np.empty((len(amplitudes), 2))
    previous: Optional[FloquetSolution] = None
    for i, amplitude in enumerate(amplitudes):
        current = floquet_solve(q.replace(amplitude=float(amplitude)), shape, tol, samples, k_modes)
        if previous is not None:
            current = _match_labels(previous, current)
        result[i] = current.quasienergies
        previous = current
    return result
