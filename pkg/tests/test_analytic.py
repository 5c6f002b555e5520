import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv

from src.analysis import analytic
from src.core.errors import ParameterError
from src.core.model import BathParams, QubitParams, preset_shape


@pytest.mark.parametrize("amplitude", [0.0, 1.0, 5.0, 10.0, 15.0])
def test_cosine_drive_gives_bessel_functions(cos_shape, amplitude):
    q = QubitParams(0.0, 0.5, amplitude)
    series = analytic.delta_n_series(q, cos_shape, 20)
    n = np.arange(-20, 21)
    assert np.allclose(series.real, 0.5 * jv(n, amplitude), atol=1e-9)
    assert np.allclose(series.imag, 0.0, atol=1e-9)


@pytest.mark.parametrize("amplitude", [1.0, 5.0, 10.0, 15.0])
@pytest.mark.parametrize("name", ["f0", "f1", "f2", "f3"])
def test_parseval_sum(name, amplitude):
    q = QubitParams(0.0, 0.7, amplitude)
    series = analytic.delta_n_series(q, preset_shape(name), 60)
    assert np.sum(np.abs(series) ** 2) == pytest.approx(q.delta ** 2, abs=1e-8)


def test_fft_matches_quadrature():
    shape = preset_shape("f2")
    q = QubitParams(0.0, 1.0, 5.0)
    n = 3

    def part(fn):
        value, _ = quad(
            lambda t: fn(n * t - q.amplitude * shape.integral(t)),
            0.0, shape.period, limit=400, epsabs=1e-13, epsrel=1e-13,
        )
        return value / shape.period

    expected = complex(part(math.cos), part(math.sin))
    assert analytic.delta_n(q, shape, n) == pytest.approx(expected, abs=1e-9)


def test_undriven_coupling(cos_shape):
    q = QubitParams(0.0, 0.5, 0.0)
    assert analytic.delta_n(q, cos_shape, 0) == pytest.approx(0.5)
    assert abs(analytic.delta_n(q, cos_shape, 2)) < 1e-14


def test_effective_coupling():
    assert analytic.effective_coupling(-0.3 + 1e-15j) == -0.3
    assert analytic.effective_coupling(0.3 + 0.4j) == pytest.approx(0.5)


def test_effective_hamiltonian_is_hermitian(qubit):
    h = analytic.effective_hamiltonian(qubit, preset_shape("f3"), 2)
    assert np.allclose(h, h.conj().T)
    assert h[0, 0] == pytest.approx(0.5 * (qubit.epsilon0 - 2))


def test_transverse_inversion_matches_closed_form():
    rng = np.random.default_rng(7)
    for detuning, coupling, gamma in zip(
        rng.uniform(-5, 5, 10_000), rng.uniform(-1, 1, 10_000), rng.uniform(0.01, 1, 10_000)
    ):
        s, p = analytic.bloch_steady_transverse(detuning, coupling, gamma)
        assert p == pytest.approx(analytic.transverse_peak(detuning, coupling, gamma), abs=1e-10)
        assert s.norm <= 1.0 + 1e-9


def test_longitudinal_inversion_matches_closed_form():
    rng = np.random.default_rng(11)
    for detuning, coupling, gamma in zip(
        rng.uniform(-5, 5, 2_000), rng.uniform(-1, 1, 2_000), rng.uniform(0.01, 1, 2_000)
    ):
        _, p = analytic.bloch_steady_longitudinal(detuning, coupling, gamma)
        assert p == pytest.approx(analytic.longitudinal_peak(detuning, coupling, gamma), abs=1e-10)


def test_transverse_peak_shape():
    coupling = 0.4
    assert analytic.transverse_peak(0.0, coupling, 1e-9) == pytest.approx(0.5, abs=1e-8)
    half = coupling / math.sqrt(2)
    assert analytic.transverse_peak(half, coupling, 1e-9) == pytest.approx(0.25, abs=1e-8)
    assert analytic.transverse_peak(0.3, coupling, 0.1) == analytic.transverse_peak(-0.3, coupling, 0.1)


def test_longitudinal_peak_is_antisymmetric():
    coupling, gamma = 0.3, 0.05
    assert analytic.longitudinal_peak(0.0, coupling, gamma) == 0.5
    _, p = analytic.bloch_steady_longitudinal(0.0, coupling, gamma)
    assert p == pytest.approx(0.5, abs=1e-12)
    for d in (0.1, 0.5, 2.0):
        above = analytic.longitudinal_peak(d, coupling, gamma) - 0.5
        below = analytic.longitudinal_peak(-d, coupling, gamma) - 0.5
        assert above == pytest.approx(-below)


def test_inversion_detuning_is_maximum():
    coupling, gamma = 0.3, 0.05
    best = analytic.inversion_detuning(coupling, gamma)
    peak = analytic.longitudinal_peak(best, coupling, gamma)
    assert peak > 0.5
    scan = analytic.longitudinal_peak(np.linspace(-3, 3, 20001), coupling, gamma)
    assert peak == pytest.approx(scan.max(), abs=1e-7)
    assert peak >= scan.max()


def test_gamma_must_be_positive():
    with pytest.raises(ParameterError):
        analytic.bloch_steady_transverse(0.1, 0.2, 0.0)
    with pytest.raises(ParameterError):
        analytic.bloch_steady_longitudinal(0.1, 0.2, -1.0)


def test_background():
    assert analytic.background(QubitParams(0.0, 0.5, 10.0)) == 0.5
    assert analytic.background(QubitParams(2.0, 0.5, 10.0)) == pytest.approx(0.5 - math.pi * 20 / 408)
    amp = 10.0
    h = 1e-4
    top = math.sqrt(2) * amp
    slope = (
        analytic.background(QubitParams(top + h, 0.5, amp)) - analytic.background(QubitParams(top - h, 0.5, amp))
    ) / (2 * h)
    assert abs(slope) < 1e-7
    q = QubitParams(3.0, 0.5, amp)
    alpha = 0.02
    assert analytic.background(q) == pytest.approx(
        0.5 - math.pi * alpha * q.epsilon0 / (2 * analytic.mean_relaxation_rate(q, alpha))
    )
    with pytest.raises(ParameterError):
        analytic.background(QubitParams(1.0, 0.5, 0.0))


@pytest.mark.parametrize("eps0", [-4.0, 0.5, 3.0, 14.0])
def test_background_depends_on_drive_magnitude(eps0):
    positive = analytic.background(QubitParams(eps0, 0.5, 10.0))
    negative = analytic.background(QubitParams(eps0, 0.5, -10.0))
    assert negative == positive
    assert 0.0 <= negative <= 1.0
    assert analytic.mean_relaxation_rate(QubitParams(eps0, 0.5, -10.0), 0.01) == pytest.approx(
        analytic.mean_relaxation_rate(QubitParams(eps0, 0.5, 10.0), 0.01)
    )


def test_static_rates():
    bath = BathParams(alpha=0.01, beta=1e8)
    gamma, gamma_phi = analytic.appendix_rates(0.5, bath)
    assert gamma == pytest.approx(math.pi * 0.01 * 0.5)
    assert gamma_phi == pytest.approx(4 * math.pi * 0.01 / 1e8)

    warm = BathParams(alpha=0.01, beta=2.0)
    assert analytic.appendix_rates(0.0, warm)[0] == pytest.approx(2 * math.pi * 0.01 / 2.0)
    assert analytic.appendix_rates(0.8, warm)[0] == pytest.approx(math.pi * 0.01 * 0.8 / math.tanh(0.8))


def test_static_bloch_equation():
    bath = BathParams(alpha=0.01, beta=2.0)
    transverse = analytic.static_bloch_equation(0.7, bath, "x")
    assert transverse.steady.sz == pytest.approx(-math.tanh(0.7))
    assert transverse.steady.sx == pytest.approx(0.0, abs=1e-14)
    longitudinal = analytic.static_bloch_equation(0.7, bath, "z")
    assert longitudinal.steady is None
    assert longitudinal.matrix[0, 0] == pytest.approx(-4 * math.pi * 0.01 / 2.0)
    with pytest.raises(ParameterError):
        analytic.static_bloch_equation(0.7, bath, "y")


def test_pattern_far_from_resonance_is_small(cos_shape):
    grid = analytic.analytic_pattern(np.array([0.5]), np.array([10.0]), cos_shape, 0.05, 0.01)
    assert grid.values[0, 0] < 1e-2


def test_pattern_dominated_by_nearest_resonance(cos_shape):
    delta, gamma, amp = 0.5, 0.05, 10.0
    grid = analytic.analytic_pattern(np.array([8.0]), np.array([amp]), cos_shape, delta, gamma)
    coupling = analytic.effective_coupling(analytic.delta_n(QubitParams(0.0, delta, amp), cos_shape, 8))
    nearest = analytic.transverse_peak(0.0, coupling, gamma)
    assert grid.values[0, 0] == pytest.approx(nearest, abs=2e-2)


def test_pattern_background_and_longitudinal(cos_shape):
    eps = np.linspace(-3, 3, 7)
    amp = np.array([0.0, 5.0])
    plain = analytic.analytic_pattern(eps, amp, cos_shape, 0.5, 0.05)
    shifted = analytic.analytic_pattern(eps, amp, cos_shape, 0.5, 0.05, include_background=True)
    assert np.array_equal(plain.values[:, 0], shifted.values[:, 0])
    offset = analytic.background(QubitParams(2.0, 0.5, 5.0)) - 0.5
    assert shifted.values[5, 1] - plain.values[5, 1] == pytest.approx(offset)

    peaks = analytic.analytic_pattern(eps, amp, cos_shape, 0.5, 0.05, coupling="longitudinal", n_max=3)
    assert sorted(peaks) == list(range(-3, 4))
    assert peaks[1].values.shape == (7, 2)

    with pytest.raises(ParameterError):
        analytic.analytic_pattern(eps, amp, cos_shape, 0.5, 0.05, coupling="mixed")


def test_fit_gamma_recovers_width():
    coupling, gamma, n = 0.2, 0.07, 3
    eps = np.linspace(2.5, 3.5, 101)
    p = analytic.transverse_peak(n - eps, coupling, gamma)
    fit = analytic.fit_gamma(eps, p, n, coupling)
    assert fit.gamma == pytest.approx(gamma, rel=1e-6)
    assert fit.rms < 1e-9
    assert fit.samples == 101


@pytest.mark.parametrize(
    "coupling, peak, baseline",
    [("transverse", analytic.transverse_peak, 0.08), ("longitudinal", analytic.longitudinal_peak, -0.03)],
)
def test_fit_gamma_with_baseline(coupling, peak, baseline):
    delta_n, gamma, n = 0.11, 0.06, 7
    eps = np.linspace(6.5, 7.5, 101)
    p = peak(n - eps, delta_n, gamma) + baseline
    fit = analytic.fit_gamma(eps, p, n, delta_n, coupling, offset=True)
    assert fit.gamma == pytest.approx(gamma, rel=1e-5)
    assert fit.offset == pytest.approx(baseline, abs=1e-7)
    assert fit.rms < 1e-8
    assert analytic.fit_gamma(eps, p, n, delta_n, coupling).offset == 0.0
