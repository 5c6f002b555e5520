"""
Fourier-space checks on desk-scale cosine patterns: arc location, arc
contrast, decay rates and the mixed-coupling overlap. Each fixture runs a
full (eps0, A) sweep, so the module is deselected with -m "not slow".
"""

import math

import numpy as np
import pytest

from src.analysis import arcs, spectra
from src.core.model import preset_shape
from src.pipeline import figures
from src.pipeline.orchestrator import PipelineOrchestrator
from src.storage import grid_files
from src.utils.config import RunConfig

pytestmark = pytest.mark.slow

PERIOD = 2 * math.pi


@pytest.fixture(scope="module")
def base(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk")
    return RunConfig().with_overrides(output={"directory": str(out)}, workers=4)


@pytest.fixture(scope="module")
def cosine_spectrum(base):
    cfg = figures._config(base, "arcs", drive={"preset": "cos"}, sweep=figures.DECAY_SWEEP)
    orch = PipelineOrchestrator(cfg)
    return orch.transform(orch.sweep())


def _decay_rate(base, alpha, temperature):
    _, (_, fit) = figures._decay(base, f"decay_{alpha}_{temperature}", alpha, temperature)
    return fit.rate


def test_ridge_follows_principal_arc(cosine_spectrum):
    spec = cosine_spectrum
    tau = spec.tau_eps[(spec.tau_eps >= PERIOD / 8) & (spec.tau_eps <= 3 * PERIOD / 8)]
    predicted = arcs.arc_generic(preset_shape("cos"), tau)[0]
    ridge = spectra.extract_ridge(spec, tau, predicted, halfwidth_bins=3)

    bin_width = spec.tau_amp[1] - spec.tau_amp[0]
    close = np.abs(ridge.tau_amp - predicted) <= bin_width + 1e-12
    assert close.mean() >= 0.75


def test_second_order_arc_stands_out(cosine_spectrum):
    spec = cosine_spectrum
    shape = preset_shape("cos")
    # far enough from the principal arc that the side samples miss it
    tau = np.linspace(4.5, PERIOD, 30)
    curve = arcs.ArcCurve(
        branch=0, tau_eps=tau, tau_amp=arcs.arc_higher_order(shape, tau, 2, 0), order=2, shift=0,
    )
    contrast = spectra.arc_contrast(spec, curve, offset_bins=5)
    assert np.nanmedian(contrast) >= 2.0


def test_decay_rate_at_low_temperature(base):
    rate = _decay_rate(base, 0.05, 0.1)
    assert rate == pytest.approx(0.4, rel=0.25)


def test_decay_rate_grows_with_coupling(base):
    assert _decay_rate(base, 0.01, 0.5) < _decay_rate(base, 0.1, 0.5)


def test_mixed_coupling_leans_transverse(base):
    thetas = [0.0, math.pi / 8, math.pi / 4, math.pi / 2]
    cfg = figures._config(
        base, "overlap", drive={"preset": "cos"}, sweep=figures.OVERLAP_SWEEP, overlap={"thetas": thetas},
    )
    result = PipelineOrchestrator(cfg).run("overlap")
    table = grid_files.read_table(result["artifacts"]["overlap"])

    leaning = table[table["theta"] <= math.pi / 4 + 1e-12]
    assert len(leaning) == 3
    assert (leaning["r_x"] >= leaning["r_z"]).all()
    assert table["r_z"].iloc[-1] == pytest.approx(1.0)
