"""
Pattern sweeps and their Fourier-space analysis.

The transform of a pattern P(eps0, A) is

    W(tau_eps, tau_A) = (1/4 pi^2) int deps0 dA exp(-i eps0 tau_eps - i A tau_A) P(eps0, A),

evaluated as a zero-padded 2-d DFT scaled by the grid spacings.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import distance_transform_edt
from tqdm import tqdm

from src.analysis.arcs import ArcCurve
from src.analysis.grids import PatternGrid, SpectrumGrid, axis_spacing
from src.core.errors import LZSMError, ParameterError, SweepError
from src.core.model import BathParams, DrivingShape, QubitParams
from src.core.redfield import POSITIVITY_TOLERANCE, SolverSettings, solve_point
from src.observability.logger import SolverLogger
from src.observability.metrics import get_metrics_collector
from src.observability.tracer import PipelineTracer

logger = SolverLogger("spectra")
tracer = PipelineTracer("spectra")
metrics = get_metrics_collector()

MAX_FAILED_FRACTION = 0.01
MIN_FIT_SAMPLES = 8


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _solve_row(
    row: int,
    epsilon0: float,
    amplitudes: np.ndarray,
    delta: float,
    shape: DrivingShape,
    bath: BathParams,
    settings: SolverSettings,
):
    """One eps0 row of a sweep; runs inside worker processes"""
    values = np.full(amplitudes.size, np.nan)
    failures = []
    positivity = 0
    for j, amplitude in enumerate(amplitudes):
        q = QubitParams(epsilon0, delta, float(amplitude))
        try:
            result = solve_point(q, shape, bath, settings)
        except (LZSMError, np.linalg.LinAlgError) as e:
            logger.log_diagnostic(
                "sweep_point_failed",
                epsilon0=epsilon0, amplitude=float(amplitude), error=str(e),
                error_type=type(e).__name__, **getattr(e, "details", {}),
            )
            failures.append({"epsilon0": epsilon0, "amplitude": float(amplitude), "error": str(e)})
            continue
        values[j] = result.p_ex
        if result.min_eigenvalue < -POSITIVITY_TOLERANCE:
            positivity += 1
    return row, values, failures, positivity


def sweep_pattern(
    q: QubitParams,
    shape: DrivingShape,
    bath: BathParams,
    eps_axis: np.ndarray,
    amp_axis: np.ndarray,
    settings: SolverSettings = SolverSettings(),
    workers: int = 1,
    progress: bool = False,
    metadata: Optional[Dict[str, Any]] = None,
    max_failed_fraction: float = MAX_FAILED_FRACTION,
) -> PatternGrid:
    """
    Excited population on an (eps0, A) grid.

    ``q`` supplies Delta; its eps0 and A are ignored. Rows of constant eps0
    are distributed over ``workers`` processes and assembled by index, so
    the result does not depend on scheduling. Failed points become NaN.

    Raises:
        SweepError: more than ``max_failed_fraction`` of the points failed
    """
    eps_axis = np.asarray(eps_axis, dtype=float)
    amp_axis = np.asarray(amp_axis, dtype=float)
    if bath.alpha <= 0:
        raise ParameterError("sweeps need alpha > 0")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")

    values = np.full((eps_axis.size, amp_axis.size), np.nan)
    failures: List[Dict[str, Any]] = []
    positivity = 0
    start_time = time.perf_counter()

    logger.log_stage_start("sweep", {"n_eps": eps_axis.size, "n_amp": amp_axis.size, "workers": workers})

    with tracer.trace_operation("sweep", {"points": values.size, "workers": workers}):
        jobs = [(i, float(e), amp_axis, q.delta, shape, bath, settings) for i, e in enumerate(eps_axis)]
        with tqdm(total=len(jobs), desc="sweep", unit="row", disable=not progress) as bar:
            if workers == 1:
                for job in jobs:
                    row, row_values, row_failures, row_positivity = _solve_row(*job)
                    values[row] = row_values
                    failures.extend(row_failures)
                    positivity += row_positivity
                    bar.update()
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    futures = [pool.submit(_solve_row, *job) for job in jobs]
                    for future in as_completed(futures):
                        row, row_values, row_failures, row_positivity = future.result()
                        values[row] = row_values
                        failures.extend(row_failures)
                        positivity += row_positivity
                        bar.update()

    failures.sort(key=lambda f: (f["epsilon0"], f["amplitude"]))
    total = values.size
    fraction = len(failures) / total

    duration_ms = (time.perf_counter() - start_time) * 1000
    # serial rows already counted their positivity warnings in this process
    metrics.record_sweep(total - len(failures), len(failures), positivity if workers > 1 else 0, duration_ms)

    summary = {"points": total, "failed": len(failures), "failed_fraction": fraction, "failures": failures[:20]}
    if fraction > max_failed_fraction:
        logger.logger.error("sweep_aborted", **{k: v for k, v in summary.items() if k != "failures"})
        raise SweepError(f"{len(failures)} of {total} grid points failed ({fraction:.1%})", summary)

    logger.log_stage_complete("sweep", {"failed": len(failures), "positivity_warnings": positivity}, duration_ms)

    provenance = {
        "source": "sweep",
        "delta": q.delta,
        "shape": shape.to_triples(),
        "omega": shape.omega,
        "alpha": bath.alpha,
        "beta": bath.beta,
        "theta": bath.theta,
        "settings": asdict(settings),
        "failed_points": len(failures),
        "failures": failures,
        "positivity_warnings": positivity,
    }
    provenance.update(metadata or {})
    return PatternGrid(eps_axis, amp_axis, values, provenance)


def fill_missing(grid: PatternGrid) -> PatternGrid:
    """Replace NaN points by their nearest valid neighbour on the grid"""
    missing = grid.missing
    if not missing.any():
        return grid
    if missing.all():
        raise ParameterError("pattern has no valid points to fill from")

    indices = distance_transform_edt(missing, return_distances=False, return_indices=True)
    filled = grid.values[tuple(indices)]
    return PatternGrid(grid.eps, grid.amp, filled, {**grid.metadata, "filled_points": int(missing.sum())})


def slice_pattern(grid: PatternGrid, amplitude: float) -> Tuple[np.ndarray, np.ndarray]:
    """eps0 slice at the grid column nearest to ``amplitude``"""
    j = int(np.argmin(np.abs(grid.amp - amplitude)))
    if grid.amp.size > 1 and abs(grid.amp[j] - amplitude) > 0.5 * axis_spacing(grid.amp) + 1e-12:
        raise ParameterError(f"amplitude {amplitude} outside grid [{grid.amp[0]}, {grid.amp[-1]}]")
    return grid.eps.copy(), grid.values[:, j].copy()


# ---------------------------------------------------------------------------
# Fourier transform
# ---------------------------------------------------------------------------

def _conjugate_axis(n: int, spacing: float) -> np.ndarray:
    return 2 * math.pi * np.fft.fftfreq(n, spacing)


def fourier2d(p: PatternGrid, pad: int = 2, subtract_mean: bool = True) -> SpectrumGrid:
    """
    2-d transform of a pattern with zero padding by ``pad`` along both axes.

    Missing points are filled first and flagged in the metadata. The mean
    is removed by default so the origin peak does not swamp the arcs.
    """
    if pad not in (1, 2, 4):
        raise ParameterError(f"pad must be 1, 2 or 4, got {pad}")

    filled = False
    if p.missing.any():
        p = fill_missing(p)
        filled = True

    d_eps, d_amp = axis_spacing(p.eps), axis_spacing(p.amp)
    n1, n2 = pad * p.eps.size, pad * p.amp.size
    mean = float(p.values.mean()) if subtract_mean else 0.0

    with tracer.trace_operation("fourier2d", {"shape": (n1, n2)}):
        raw = np.fft.fft2(p.values - mean, s=(n1, n2))
        tau_eps = _conjugate_axis(n1, d_eps)
        tau_amp = _conjugate_axis(n2, d_amp)
        phase = np.exp(-1j * np.add.outer(p.eps[0] * tau_eps, p.amp[0] * tau_amp))
        values = raw * phase * (d_eps * d_amp / (4 * math.pi ** 2))

    metadata = {
        **p.metadata,
        "pad": pad,
        "subtract_mean": subtract_mean,
        "mean": mean,
        "filled_missing": filled,
        "eps_start": float(p.eps[0]),
        "amp_start": float(p.amp[0]),
        "eps_spacing": d_eps,
        "amp_spacing": d_amp,
        "pattern_shape": [p.eps.size, p.amp.size],
    }
    return SpectrumGrid(
        tau_eps=np.fft.fftshift(tau_eps),
        tau_amp=np.fft.fftshift(tau_amp),
        values=np.fft.fftshift(values),
        metadata=metadata,
    )


def inverse_fourier2d(spec: SpectrumGrid) -> np.ndarray:
    """
    Undo ``fourier2d``: the zero-padded (and mean-subtracted) pattern that
    went into the transform, shape (pad n_eps, pad n_A).
    """
    meta = spec.metadata
    try:
        d_eps, d_amp = meta["eps_spacing"], meta["amp_spacing"]
        eps0, amp0 = meta["eps_start"], meta["amp_start"]
    except KeyError as e:
        raise ParameterError(f"spectrum lacks transform metadata: {e}") from e

    values = np.fft.ifftshift(spec.values)
    n1, n2 = values.shape
    tau_eps = _conjugate_axis(n1, d_eps)
    tau_amp = _conjugate_axis(n2, d_amp)
    phase = np.exp(-1j * np.add.outer(eps0 * tau_eps, amp0 * tau_amp))
    raw = values / (phase * (d_eps * d_amp / (4 * math.pi ** 2)))
    return np.fft.ifft2(raw).real


# ---------------------------------------------------------------------------
# Arc profiles and decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ArcProfile:
    tau_eps: np.ndarray
    magnitude: np.ndarray
    dropped: int = 0


def sample_arc(spec: SpectrumGrid, curve: ArcCurve) -> ArcProfile:
    """|W| along an arc by bilinear interpolation; samples off the grid are dropped"""
    interpolator = RegularGridInterpolator(
        (spec.tau_eps, spec.tau_amp), spec.magnitude,
        method="linear", bounds_error=False, fill_value=np.nan,
    )
    sampled = interpolator(np.column_stack([curve.tau_eps, curve.tau_amp]))
    inside = np.isfinite(sampled)
    dropped = int((~inside).sum())
    if dropped:
        logger.log_diagnostic("arc_samples_dropped", branch=curve.branch, dropped=dropped)
    return ArcProfile(curve.tau_eps[inside], sampled[inside], dropped)


def arc_contrast(spec: SpectrumGrid, curve: ArcCurve, offset_bins: int = 5) -> np.ndarray:
    """
    Ratio of |W| on the arc to the mean of |W| displaced by +-offset_bins
    along tau_A, per sample (NaN where a sample leaves the grid).
    """
    step = axis_spacing(spec.tau_amp)
    interpolator = RegularGridInterpolator(
        (spec.tau_eps, spec.tau_amp), spec.magnitude,
        method="linear", bounds_error=False, fill_value=np.nan,
    )

    def at(offset):
        return interpolator(np.column_stack([curve.tau_eps, curve.tau_amp + offset]))

    off = 0.5 * (at(offset_bins * step) + at(-offset_bins * step))
    with np.errstate(divide="ignore", invalid="ignore"):
        return at(0.0) / off


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    window: Tuple[float, float]
    residual_rms: float
    uncertainty: float
    samples: int


def _line_fit(tau: np.ndarray, magnitude: np.ndarray):
    slope, intercept = np.polyfit(tau, np.log(magnitude), 1)
    residual = np.log(magnitude) - (slope * tau + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(residual ** 2)))


def _window_samples(profile: ArcProfile, lo: float, hi: float):
    mask = (profile.tau_eps >= lo) & (profile.tau_eps <= hi)
    return profile.tau_eps[mask], profile.magnitude[mask]


def fit_decay(
    profile: ArcProfile,
    window: Optional[Tuple[float, float]] = None,
    omega: float = 1.0,
) -> DecayFit:
    """
    Exponential decay |W| ~ exp(-lambda tau_eps) from a straight-line fit
    to log|W| inside ``window``.

    The default window is T/4 +- T/8. The uncertainty is the largest change
    of lambda when either window edge moves by 10% of the window width.
    """
    period = 2 * math.pi / omega
    lo, hi = window if window is not None else (period / 8, 3 * period / 8)
    if not hi > lo:
        raise ParameterError(f"degenerate fit window [{lo}, {hi}]")
    if profile.tau_eps.size == 0 or lo < profile.tau_eps.min() - 1e-9 or hi > profile.tau_eps.max() + 1e-9:
        raise ParameterError(f"fit window [{lo:.4g}, {hi:.4g}] is not inside the profile")

    tau, magnitude = _window_samples(profile, lo, hi)
    if tau.size < MIN_FIT_SAMPLES:
        raise ParameterError(f"fit window holds {tau.size} samples, need {MIN_FIT_SAMPLES}")
    if np.any(magnitude <= 0):
        raise ParameterError("non-positive |W| inside the fit window")

    slope, intercept, rms = _line_fit(tau, magnitude)

    width = hi - lo
    deviations = []
    for shifted in (
        (lo - 0.1 * width, hi), (lo + 0.1 * width, hi),
        (lo, hi - 0.1 * width), (lo, hi + 0.1 * width),
    ):
        t_var, m_var = _window_samples(profile, *shifted)
        if t_var.size >= MIN_FIT_SAMPLES and np.all(m_var > 0):
            deviations.append(abs(_line_fit(t_var, m_var)[0] - slope))

    fit = DecayFit(
        rate=-slope,
        amplitude=math.exp(intercept),
        window=(float(lo), float(hi)),
        residual_rms=rms,
        uncertainty=max(deviations) if deviations else math.nan,
        samples=int(tau.size),
    )
    logger.logger.debug("decay_fitted", rate=fit.rate, uncertainty=fit.uncertainty, samples=fit.samples)
    return fit


@dataclass(frozen=True, eq=False)
class Ridge:
    tau_eps: np.ndarray
    tau_amp: np.ndarray
    magnitude: np.ndarray
    predicted: np.ndarray


def extract_ridge(
    spec: SpectrumGrid,
    tau_eps: Sequence[float],
    predicted: Sequence[float],
    halfwidth_bins: int = 3,
) -> Ridge:
    """
    Local maxima of |W| along tau_A columns within ``halfwidth_bins`` of a
    predicted arc. Each requested tau_eps snaps to the nearest column.
    """
    tau_eps = np.asarray(tau_eps, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    magnitude = spec.magnitude
    n_amp = spec.tau_amp.size

    found_tau, found_amp, found_mag = [], [], []
    for te, ta in zip(tau_eps, predicted):
        i = int(np.argmin(np.abs(spec.tau_eps - te)))
        j = int(np.argmin(np.abs(spec.tau_amp - ta)))
        lo, hi = max(j - halfwidth_bins, 0), min(j + halfwidth_bins + 1, n_amp)
        best = lo + int(np.argmax(magnitude[i, lo:hi]))
        found_tau.append(spec.tau_eps[i])
        found_amp.append(spec.tau_amp[best])
        found_mag.append(magnitude[i, best])

    return Ridge(np.array(found_tau), np.array(found_amp), np.array(found_mag), predicted)


# ---------------------------------------------------------------------------
# Mixed coupling overlap
# ---------------------------------------------------------------------------

def pattern_overlap(p: PatternGrid, reference: PatternGrid, subtract_mean: bool = False) -> float:
    """
    Normalized overlap <p, ref> / (|p| |ref|) over grid values.

    Raw values are used unless ``subtract_mean`` is set.
    """
    if not p.same_axes(reference):
        raise ParameterError("overlap needs patterns on identical axes")
    a, b = p.values, reference.values
    if np.isnan(a).any() or np.isnan(b).any():
        raise ParameterError("overlap of patterns with missing points; fill them first")
    if subtract_mean:
        a, b = a - a.mean(), b - b.mean()
    if np.array_equal(a, b) and np.any(a):
        return 1.0
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        raise ParameterError("overlap undefined for a zero pattern")
    return float(np.vdot(a, b).real / norm)
