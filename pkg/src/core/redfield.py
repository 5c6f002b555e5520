"""
Bloch-Redfield master equation in the Floquet basis.

The dissipator of the weak-coupling master equation is written as

    D rho = -[X, Q rho] + [X, rho Q^dagger],
    Q_{ab}(t) = sum_k exp(-i k W t) (pi/2) N(eps_a - eps_b - k W) X_{ab,k},

with the Ohmic rate function N(w) = alpha w n_th(w). Only the rate parts of
the bath correlation integrals enter; principal-value shifts are dropped.
Products of periodic matrices are formed on the Floquet time grid and
Fourier transformed into the blocks L^(k) of the Liouvillian, so all four
dissipative sums are exact convolutions of the truncated X_{ab,k}.

The periodic steady state rho(t) = sum_k exp(-i k W t) rho^(k) solves

    -i k W rho^(k) = sum_k' L^(k - k') rho^(k'),   |k|, |k'| <= K.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from src.core.errors import ParameterError, SolverError
from src.core.floquet import (
    DEFAULT_K_MODES,
    DEFAULT_K_X,
    DEFAULT_SAMPLES,
    DEFAULT_TOLERANCE,
    FloquetSolution,
    TransitionElements,
    floquet_solve,
    transition_elements,
)
from src.core.model import BathParams, DrivingShape, QubitParams, excited_state
from src.observability.logger import SolverLogger
from src.observability.metrics import get_metrics_collector
from src.observability.tracer import PipelineTracer

logger = SolverLogger("redfield")
tracer = PipelineTracer("redfield")
metrics = get_metrics_collector()

DEFAULT_SIDEBANDS = 5
MAX_SIDEBANDS = 10
ELEMENT_CUTOFF = 1e-12
CONDITION_LIMIT = 1e12
POSITIVITY_TOLERANCE = 1e-6

# row-major vectorization: (a, b) -> 2a + b
_POPULATIONS = (0, 3)


@dataclass(frozen=True, eq=False)
class LiouvillianBlocks:
    """``blocks[k + 2K]`` is the 4x4 matrix L^(k) for |k| <= 2K"""

    blocks: np.ndarray
    sidebands: int
    omega: float
    alpha: float

    def block(self, k: int) -> np.ndarray:
        return self.blocks[k + 2 * self.sidebands]

    def without_sidebands(self) -> "LiouvillianBlocks":
        """Keep only L^(0); a rotating-wave truncation used as a regression reference"""
        stripped = np.zeros_like(self.blocks)
        stripped[2 * self.sidebands] = self.blocks[2 * self.sidebands]
        return replace(self, blocks=stripped)

    def trace_defect(self) -> float:
        """max |sum_a L^(k)_{aa, a'b'}| over all k and columns"""
        sums = self.blocks[:, _POPULATIONS[0], :] + self.blocks[:, _POPULATIONS[1], :]
        return float(np.abs(sums).max())


@dataclass(frozen=True, eq=False)
class SteadyState:
    """``coefficients[k + K, a, b]`` is rho^(k)_{ab} in the Floquet basis"""

    coefficients: np.ndarray
    sidebands: int
    omega: float
    residual: float
    trace_defect: float
    condition: float
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.sidebands:
            return np.zeros((2, 2), dtype=complex)
        return self.coefficients[k + self.sidebands]

    def hermiticity_defect(self) -> float:
        """max |rho^(k)_{ab} - conj(rho^(-k)_{ba})|"""
        mirrored = self.coefficients[::-1].conj().transpose(0, 2, 1)
        return float(np.abs(self.coefficients - mirrored).max())

    def floquet_matrix(self, t: float) -> np.ndarray:
        k = np.arange(-self.sidebands, self.sidebands + 1)
        return np.tensordot(np.exp(-1j * k * self.omega * t), self.coefficients, axes=(0, 0))


def bath_rate(omega, bath: BathParams):
    """
    N(w) = alpha w n_th(w) with n_th(w) = 1/(exp(beta w) - 1).

    Continuous through w = 0 (N(0) = alpha/beta); for w < 0 the same
    expression equals alpha |w| (1 + n_th(|w|)), the emission rate.
    """
    x = bath.beta * np.asarray(omega, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = np.where(x == 0.0, 1.0, x / np.expm1(x))
    # x/expm1(x) -> |x| for x -> -inf, -> 0 for x -> +inf
    ratio = np.where(np.isnan(ratio), np.where(x < 0, -x, 0.0), ratio)
    result = bath.alpha / bath.beta * ratio
    return float(result) if np.ndim(result) == 0 else result


def _on_grid(coefficients: np.ndarray, k_max: int, n_samples: int) -> np.ndarray:
    """sum_k c_k exp(-i k W t_m) on the M-point grid"""
    placed = np.zeros((n_samples,) + coefficients.shape[1:], dtype=complex)
    k = np.arange(-k_max, k_max + 1)
    placed[k % n_samples] = coefficients
    return np.fft.fft(placed, axis=0)


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    return np.einsum("mij,mkl->mikjl", a, b).reshape(m, 4, 4)


def build_liouvillian(
    sol: FloquetSolution,
    x_elems: TransitionElements,
    bath: BathParams,
    sidebands: int = DEFAULT_SIDEBANDS,
) -> LiouvillianBlocks:
    """
    Fourier blocks L^(k), |k| <= 2K, of the Floquet-Redfield generator.

    The coherent part -i(eps_a - eps_b) sits on the diagonal of L^(0).
    """
    if x_elems.k_max < 2 * sidebands:
        raise SolverError(
            f"insufficient transition elements: k_x={x_elems.k_max} < 2K={2 * sidebands}"
        )

    n_samples, omega = sol.n_samples, sol.omega
    k_x = x_elems.k_max
    k = np.arange(-k_x, k_x + 1)
    eps = sol.quasienergies

    elements = np.where(np.abs(x_elems.elements) < ELEMENT_CUTOFF, 0.0, x_elems.elements)

    # frequencies eps_a - eps_b - k W, shape (2k_x+1, 2, 2)
    gaps = (eps[:, None] - eps[None, :])[None, :, :] - (k * omega)[:, None, None]
    q_coeff = 0.5 * math.pi * bath_rate(gaps, bath) * elements
    # Fourier components of Q^dagger: (pi/2) N(eps_b - eps_a + k W) X_{ab,k}
    qd_coeff = 0.5 * math.pi * bath_rate(-gaps, bath) * elements

    x_t = _on_grid(elements, k_x, n_samples)
    q_t = _on_grid(q_coeff, k_x, n_samples)
    qd_t = _on_grid(qd_coeff, k_x, n_samples)
    eye = np.broadcast_to(np.eye(2, dtype=complex), x_t.shape)

    generator = (
        - _kron(x_t @ q_t, eye)
        + _kron(q_t, x_t.transpose(0, 2, 1))
        + _kron(x_t, qd_t.transpose(0, 2, 1))
        - _kron(eye, (qd_t @ x_t).transpose(0, 2, 1))
    )

    spectrum = np.fft.ifft(generator, axis=0)
    kk = np.arange(-2 * sidebands, 2 * sidebands + 1)
    blocks = spectrum[kk % n_samples].copy()

    coherent = -1j * (eps[:, None] - eps[None, :]).ravel()
    blocks[2 * sidebands] += np.diag(coherent)

    return LiouvillianBlocks(blocks=blocks, sidebands=sidebands, omega=omega, alpha=bath.alpha)


def steady_state(blocks: LiouvillianBlocks, sidebands: Optional[int] = None) -> SteadyState:
    """
    Solve for the Fourier coefficients of the periodic long-time state.

    The system is singular by trace conservation; the k = 0 population row
    of the first Floquet state is replaced by the normalization
    sum_a rho^(0)_{aa} = 1 and its residual is reported.
    """
    K = blocks.sidebands if sidebands is None else sidebands
    if K > blocks.sidebands:
        raise SolverError(f"blocks assembled for K={blocks.sidebands}, requested K={K}")
    if blocks.alpha == 0.0:
        raise SolverError("steady state is not unique without dissipation (alpha = 0)")

    n_k = 2 * K + 1
    size = 4 * n_k
    system = np.zeros((size, size), dtype=complex)
    for i, k in enumerate(range(-K, K + 1)):
        for j, kp in enumerate(range(-K, K + 1)):
            system[4 * i:4 * i + 4, 4 * j:4 * j + 4] = blocks.block(k - kp)
        system[4 * i:4 * i + 4, 4 * i:4 * i + 4] += 1j * k * blocks.omega * np.eye(4)

    row = 4 * K + _POPULATIONS[0]
    discarded = system[row].copy()
    system[row] = 0.0
    system[row, 4 * K + _POPULATIONS[0]] = 1.0
    system[row, 4 * K + _POPULATIONS[1]] = 1.0
    rhs = np.zeros(size, dtype=complex)
    rhs[row] = 1.0

    condition = float(np.linalg.cond(system))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SolverError(f"ill-conditioned steady-state system (cond={condition:.3g})", condition=condition)

    solution = lu_solve(lu_factor(system), rhs)
    coefficients = solution.reshape(n_k, 2, 2)

    residual = float(abs(discarded @ solution))
    trace = coefficients[K, 0, 0] + coefficients[K, 1, 1]

    return SteadyState(
        coefficients=coefficients,
        sidebands=K,
        omega=blocks.omega,
        residual=residual,
        trace_defect=float(abs(trace - 1.0)),
        condition=condition,
    )


def excited_population(state: SteadyState, sol: FloquetSolution, q: QubitParams) -> float:
    """
    P_ex = (1/T) int_0^T <e|rho(t)|e> dt for the excited state |e> of the
    undriven qubit, evaluated from the Fourier coefficients:

        P_ex = sum_{k,a,b} rho^(k)_{ab} (1/T) int dt exp(-i k W t) <e|Phi_a><Phi_b|e>
    """
    e = excited_state(q)
    projections = np.einsum("i,mia->ma", e.conj(), sol.samples)
    products = projections[:, :, None] * projections[:, None, :].conj()
    spectrum = np.fft.fft(products, axis=0) / sol.n_samples

    k = np.arange(-state.sidebands, state.sidebands + 1)
    weights = spectrum[k % sol.n_samples]
    return float(np.einsum("kab,kab->", state.coefficients, weights).real)


def density_at(state: SteadyState, sol: FloquetSolution, t: float) -> np.ndarray:
    """rho_inf(t) in the diabatic (sigma_z) basis"""
    modes = sol.mode_at(t)
    return modes @ state.floquet_matrix(t) @ modes.conj().T


def min_eigenvalue(state: SteadyState, sol: FloquetSolution, n_times: int = 16) -> float:
    """Smallest eigenvalue of rho_inf(t) over equidistant times in one period"""
    smallest = np.inf
    for t in np.arange(n_times) * sol.period / n_times:
        rho = density_at(state, sol, t)
        rho = 0.5 * (rho + rho.conj().T)
        smallest = min(smallest, float(np.linalg.eigvalsh(rho)[0]))
    return smallest


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = DEFAULT_TOLERANCE
    samples: int = DEFAULT_SAMPLES
    k_modes: int = DEFAULT_K_MODES
    k_x: int = DEFAULT_K_X
    sidebands: int = DEFAULT_SIDEBANDS

    def __post_init__(self):
        if not 0 <= self.sidebands <= MAX_SIDEBANDS:
            raise ParameterError(f"sidebands must lie in [0, {MAX_SIDEBANDS}], got {self.sidebands}")
        if self.k_x < 2 * self.sidebands:
            raise ParameterError(f"k_x={self.k_x} must be >= 2 * sidebands")


@dataclass(frozen=True)
class PointResult:
    p_ex: float
    residual: float
    trace_defect: float
    min_eigenvalue: float
    condition: float


def solve_point(
    q: QubitParams,
    shape: DrivingShape,
    bath: BathParams,
    settings: SolverSettings = SolverSettings(),
) -> PointResult:
    """
    Full per-point pipeline: Floquet solve, transition elements,
    Liouvillian, steady state, excited population.
    """
    if bath.alpha == 0.0:
        raise SolverError("steady state is not unique without dissipation (alpha = 0)")

    start_time = time.perf_counter()
    with tracer.trace_operation("solve_point", {"epsilon0": q.epsilon0, "amplitude": q.amplitude}):
        sol = floquet_solve(q, shape, settings.tolerance, settings.samples, settings.k_modes)
        x_elems = transition_elements(sol, bath.coupling_operator(), settings.k_x)
        blocks = build_liouvillian(sol, x_elems, bath, settings.sidebands)
        state = steady_state(blocks)
        p_ex = excited_population(state, sol, q)
        smallest = min_eigenvalue(state, sol)

    if smallest < -POSITIVITY_TOLERANCE:
        logger.log_diagnostic(
            "positivity_violation",
            epsilon0=q.epsilon0, amplitude=q.amplitude, min_eigenvalue=smallest
        )
        metrics.record_counter("positivity_warnings")

    logger.log_stage_complete(
        "solve_point",
        {"p_ex": p_ex, "residual": state.residual, "condition": state.condition},
        (time.perf_counter() - start_time) * 1000,
    )

    return PointResult(
        p_ex=p_ex,
        residual=state.residual,
        trace_defect=state.trace_defect,
        min_eigenvalue=smallest,
        condition=state.condition,
    )
