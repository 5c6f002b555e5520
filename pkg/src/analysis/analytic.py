"""
Closed-form results for the driven dissipative qubit.

Near the n-th resonance eps0 ~ n W the qubit behaves like a static two-level
system with detuning eps0 - n W and effective tunnel element

    Delta_n(A) = (Delta / T) int_0^T dt exp(i n W t - i A F(t)),

where F is the driving integral. Relaxation enters through a single
phenomenological rate Gamma. Detunings are passed as delta_n = n W - eps0,
so the resonance sits at delta_n = 0.
"""

import math
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Union

import numpy as np
from scipy.optimize import curve_fit

from src.analysis.grids import PatternGrid
from src.core.errors import ParameterError
from src.core.model import BathParams, DrivingShape, QubitParams
from src.observability.logger import SolverLogger

logger = SolverLogger("analytic")

DEFAULT_DFT_SAMPLES = 1024
DEFAULT_N_MAX = 20

Coupling = Literal["transverse", "longitudinal"]


@dataclass(frozen=True)
class BlochVector:
    sx: float
    sy: float
    sz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.sx ** 2 + self.sy ** 2 + self.sz ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @property
    def population(self) -> float:
        """Excited-state population (1 + s_z) / 2"""
        return 0.5 * (1.0 + self.sz)


# ---------------------------------------------------------------------------
# Effective tunnel element
# ---------------------------------------------------------------------------

def delta_n_series(
    q: QubitParams,
    shape: DrivingShape,
    n_max: int,
    samples: int = DEFAULT_DFT_SAMPLES,
) -> np.ndarray:
    """
    Delta_n for all |n| <= n_max from one FFT of exp(-i A F(t)).

    Entry ``n + n_max`` holds Delta_n.
    """
    if n_max < 0:
        raise ParameterError(f"n_max must be >= 0, got {n_max}")
    if 2 * n_max + 1 > samples:
        raise ParameterError(f"{samples} samples cannot resolve |n| <= {n_max}")

    t = np.arange(samples) * shape.period / samples
    integrand = np.exp(-1j * q.amplitude * shape.integral(t))
    spectrum = np.fft.ifft(integrand)
    n = np.arange(-n_max, n_max + 1)
    return q.delta * spectrum[n % samples]


def delta_n(q: QubitParams, shape: DrivingShape, n: int, samples: int = DEFAULT_DFT_SAMPLES) -> complex:
    """Effective tunnel element of the n-th resonance; Delta J_n(A/W) for a cosine drive"""
    n = int(n)
    return complex(delta_n_series(q, shape, abs(n), samples)[n + abs(n)])


def effective_hamiltonian(q: QubitParams, shape: DrivingShape, n: int) -> np.ndarray:
    """Rotating-frame Hamiltonian 1/2 (eps0 - n W) sigma_z + 1/2 Delta_n sigma_+ + h.c."""
    dn = delta_n(q, shape, n)
    detuning = q.epsilon0 - n * shape.omega
    return np.array([
        [0.5 * detuning, 0.5 * dn],
        [0.5 * np.conj(dn), -0.5 * detuning],
    ], dtype=complex)


def effective_coupling(dn: complex) -> float:
    """
    Real tunnel element used by the Bloch equations.

    Time-reversal symmetric drives give real Delta_n and its sign is kept;
    otherwise the phase is rotated away and |Delta_n| is used.
    """
    dn = complex(dn)
    if abs(dn.imag) <= 1e-12 * max(1.0, abs(dn)):
        return dn.real
    return abs(dn)


# ---------------------------------------------------------------------------
# Bloch equations near a resonance
# ---------------------------------------------------------------------------

def _check_gamma(gamma: float):
    if not gamma > 0:
        raise ParameterError(f"Gamma must be > 0, got {gamma}")


def transverse_matrix(detuning: float, coupling: float, gamma: float):
    """
    ds/dt = M s + b for sigma_x coupling: transverse decay Gamma/2,
    relaxation of s_z towards -1 at rate Gamma.
    """
    d = -detuning
    matrix = np.array([
        [-0.5 * gamma, -d, 0.0],
        [d, -0.5 * gamma, coupling],
        [0.0, -coupling, -gamma],
    ])
    return matrix, np.array([0.0, 0.0, -gamma])


def longitudinal_matrix(detuning: float, coupling: float, gamma: float):
    """Same as ``transverse_matrix`` with the dissipative terms cycled to relax s_x"""
    d = -detuning
    matrix = np.array([
        [-gamma, -d, 0.0],
        [d, -0.5 * gamma, coupling],
        [0.0, -coupling, -0.5 * gamma],
    ])
    return matrix, np.array([-gamma, 0.0, 0.0])


def transverse_peak(detuning, coupling, gamma):
    """Lorentzian 1/2 (D^2/2) / (d^2 + D^2/2 + G^2/4); vectorized"""
    detuning = np.asarray(detuning, dtype=float)
    c2 = np.square(coupling)
    return 0.5 * (0.5 * c2) / (detuning ** 2 + 0.5 * c2 + 0.25 * gamma ** 2)


def longitudinal_peak(detuning, coupling, gamma):
    """Anti-symmetric profile 1/2 + d D / (d^2 + 2 D^2 + G^2/2) with d = eps0 - n W"""
    d = -np.asarray(detuning, dtype=float)
    return 0.5 + d * coupling / (d ** 2 + 2.0 * np.square(coupling) + 0.5 * gamma ** 2)


def _stationary(matrix: np.ndarray, inhomogeneity: np.ndarray) -> BlochVector:
    s = np.linalg.solve(matrix, -inhomogeneity)
    return BlochVector(float(s[0]), float(s[1]), float(s[2]))


def bloch_steady_transverse(detuning: float, coupling: float, gamma: float):
    """
    Stationary Bloch vector and population near a resonance with sigma_x
    coupling.

    Args:
        detuning: delta_n = n W - eps0
        coupling: real effective tunnel element Delta_n
        gamma: phenomenological relaxation rate (> 0)

    Returns:
        (BlochVector, P_n)
    """
    _check_gamma(gamma)
    s = _stationary(*transverse_matrix(detuning, coupling, gamma))
    return s, s.population


def bloch_steady_longitudinal(detuning: float, coupling: float, gamma: float):
    """As ``bloch_steady_transverse`` for sigma_z coupling"""
    _check_gamma(gamma)
    s = _stationary(*longitudinal_matrix(detuning, coupling, gamma))
    return s, s.population


def inversion_detuning(coupling: float, gamma: float) -> float:
    """delta_n where the sigma_z profile peaks above 1/2"""
    return -math.sqrt(2.0 * coupling ** 2 + 0.5 * gamma ** 2) * (1.0 if coupling >= 0 else -1.0)


# ---------------------------------------------------------------------------
# Rates and background
# ---------------------------------------------------------------------------

def mean_relaxation_rate(q: QubitParams, alpha: float) -> float:
    """Time-averaged relaxation rate alpha (2A + eps0^2 / A) of a cosine sweep"""
    if q.amplitude == 0:
        raise ParameterError("mean relaxation rate needs a nonzero drive amplitude")
    a = abs(q.amplitude)
    return alpha * (2.0 * a + q.epsilon0 ** 2 / a)


def background(q: QubitParams) -> float:
    """
    Off-resonant population 1/2 - pi eps0 A / (4 A^2 + 2 eps0^2).

    Equals 1/2 - pi alpha eps0 / (2 mean_relaxation_rate); alpha drops out.
    Flipping the sign of A is a half-period shift of the drive, so only |A|
    enters.
    """
    if q.amplitude == 0:
        raise ParameterError("background needs a nonzero drive amplitude")
    a, e = abs(q.amplitude), q.epsilon0
    return 0.5 - math.pi * e * a / (4.0 * a * a + 2.0 * e * e)


def appendix_rates(energy: float, bath: BathParams):
    """
    Static relaxation and dephasing rates of an Ohmic bath.

    Gamma = pi alpha E coth(beta E / 2), continuous at E = 0 where it is
    2 pi alpha / beta; Gamma_phi = 4 pi alpha / beta.
    """
    if math.isinf(bath.beta):
        return math.pi * bath.alpha * abs(energy), 0.0
    x = 0.5 * bath.beta * abs(energy)
    ratio = 1.0 if x == 0.0 else x / math.tanh(x)
    gamma = 2.0 * math.pi * bath.alpha / bath.beta * ratio
    gamma_phi = 4.0 * math.pi * bath.alpha / bath.beta
    return gamma, gamma_phi


@dataclass(frozen=True, eq=False)
class StaticBloch:
    matrix: np.ndarray
    inhomogeneity: np.ndarray
    steady: Optional[BlochVector]


def static_bloch_equation(energy: float, bath: BathParams, coupling: str = "x") -> StaticBloch:
    """
    Bloch equation of the undriven qubit in its eigenbasis, H = E/2 sigma_z.

    Coupling transverse to the eigenbasis ('x') relaxes towards the thermal
    value s_z = -tanh(beta E / 2); longitudinal coupling ('z') only dephases
    and leaves s_z undetermined, so ``steady`` is None.
    """
    gamma, gamma_phi = appendix_rates(energy, bath)
    if coupling == "x":
        matrix = np.array([
            [-0.5 * gamma, -energy, 0.0],
            [energy, -0.5 * gamma, 0.0],
            [0.0, 0.0, -gamma],
        ])
        inhomogeneity = np.array([0.0, 0.0, -math.pi * bath.alpha * energy])
        return StaticBloch(matrix, inhomogeneity, _stationary(matrix, inhomogeneity))
    if coupling == "z":
        matrix = np.array([
            [-gamma_phi, -energy, 0.0],
            [energy, -gamma_phi, 0.0],
            [0.0, 0.0, 0.0],
        ])
        return StaticBloch(matrix, np.zeros(3), None)
    raise ParameterError(f"static Bloch equation needs coupling 'x' or 'z', got {coupling!r}")


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

def analytic_pattern(
    eps_axis: np.ndarray,
    amp_axis: np.ndarray,
    shape: DrivingShape,
    delta: float,
    gamma: float,
    coupling: Coupling = "transverse",
    n_max: int = DEFAULT_N_MAX,
    include_background: bool = False,
) -> Union[PatternGrid, Dict[int, PatternGrid]]:
    """
    Closed-form interference pattern on an (eps0, A) grid.

    Transverse coupling returns the sum of all Lorentzians with |n| <= n_max,
    optionally shifted by the background P_bg - 1/2 (columns with A = 0 get
    no background). Longitudinal peaks do not superpose, so that case returns
    one grid per resonance keyed by n.
    """
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    _check_gamma(gamma)
    if coupling not in ("transverse", "longitudinal"):
        raise ParameterError(f"coupling must be 'transverse' or 'longitudinal', got {coupling!r}")

    eps_axis = np.asarray(eps_axis, dtype=float)
    amp_axis = np.asarray(amp_axis, dtype=float)
    omega = shape.omega
    n = np.arange(-n_max, n_max + 1)

    couplings = np.empty((amp_axis.size, n.size))
    for j, amplitude in enumerate(amp_axis):
        series = delta_n_series(QubitParams(0.0, delta, float(amplitude)), shape, n_max)
        couplings[j] = [effective_coupling(dn) for dn in series]

    # detuning[i, j, n] = n W - eps0_i
    detuning = (n * omega)[None, None, :] - eps_axis[:, None, None]
    metadata = {
        "source": "analytic",
        "coupling": coupling,
        "gamma": gamma,
        "delta": delta,
        "n_max": n_max,
        "shape": shape.to_triples(),
        "omega": omega,
    }

    if coupling == "transverse":
        values = transverse_peak(detuning, couplings[None, :, :], gamma).sum(axis=-1)
        if include_background:
            for j, amplitude in enumerate(amp_axis):
                if amplitude != 0:
                    values[:, j] += [
                        background(QubitParams(float(e), delta, float(amplitude))) - 0.5 for e in eps_axis
                    ]
        return PatternGrid(eps_axis, amp_axis, values, {**metadata, "background": include_background})

    peaks = longitudinal_peak(detuning, couplings[None, :, :], gamma)
    return {
        int(order): PatternGrid(eps_axis, amp_axis, peaks[:, :, idx].copy(), {**metadata, "n": int(order)})
        for idx, order in enumerate(n)
    }


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    rms: float
    n: int
    samples: int
    offset: float = 0.0


def fit_gamma(
    eps: np.ndarray,
    p: np.ndarray,
    n: int,
    coupling_n: float,
    coupling: Coupling = "transverse",
    omega: float = 1.0,
    gamma0: Optional[float] = None,
    offset: bool = False,
) -> GammaFit:
    """
    Least-squares Gamma of the n-th resonance profile against a numeric slice.

    With ``offset`` a constant baseline is fitted alongside Gamma, so the raw
    slice (resonance on top of the off-resonant background) can be used as is.

    Usage:
        fit = fit_gamma(eps, p_ex, 7, delta_n(q, shape, 7).real, offset=True)
    """
    eps = np.asarray(eps, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = np.isfinite(p)
    if mask.sum() < 3 + int(offset):
        raise ParameterError("not enough finite samples to fit Gamma")

    peak = transverse_peak if coupling == "transverse" else longitudinal_peak
    start = gamma0 if gamma0 is not None else max(0.1 * abs(coupling_n), 1e-3)

    if offset:
        def model(e, g, c):
            return peak(n * omega - e, coupling_n, g) + c

        baseline0 = float(np.mean(p[mask] - peak(n * omega - eps[mask], coupling_n, start)))
        p0 = [start, baseline0]
        bounds = ([1e-12, -np.inf], [np.inf, np.inf])
    else:
        def model(e, g):
            return peak(n * omega - e, coupling_n, g)

        p0 = [start]
        bounds = (1e-12, np.inf)

    popt, _ = curve_fit(model, eps[mask], p[mask], p0=p0, bounds=bounds)
    rms = float(np.sqrt(np.mean((model(eps[mask], *popt) - p[mask]) ** 2)))
    gamma = float(popt[0])
    baseline = float(popt[1]) if offset else 0.0

    logger.logger.debug("gamma_fitted", n=n, gamma=gamma, offset=baseline, rms=rms)
    return GammaFit(gamma=gamma, rms=rms, n=n, samples=int(mask.sum()), offset=baseline)
