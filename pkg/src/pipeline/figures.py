"""
Canned desk-scale runs for each figure panel.

Each entry overrides a shared base configuration; grids are coarser than
publication quality so every panel finishes in minutes on a laptop.
Nothing here needs network access or external data.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from src.analysis import analytic, spectra
from src.core.errors import ParameterError
from src.core.model import QubitParams
from src.observability.logger import SolverLogger
from src.pipeline.orchestrator import PipelineOrchestrator
from src.storage import grid_files
from src.utils.config import RunConfig

logger = SolverLogger("figures")

BASE_PHYSICS = {
    "qubit": {"epsilon0": 0.0, "delta": 0.5, "amplitude": 10.0},
    "bath": {"alpha": 1e-3, "temperature": 0.1, "coupling": "x"},
    "solver": {"tolerance": 1e-9},
}

DESK_SWEEP = {"eps_min": -10.0, "eps_max": 10.0, "n_eps": 81, "amp_min": 0.0, "amp_max": 15.0, "n_amp": 61}
DECAY_SWEEP = {"eps_min": -10.0, "eps_max": 10.0, "n_eps": 101, "amp_min": 0.0, "amp_max": 15.0, "n_amp": 76}
OVERLAP_SWEEP = {"eps_min": -10.0, "eps_max": 10.0, "n_eps": 41, "amp_min": 0.0, "amp_max": 15.0, "n_amp": 31}
SLICE_AMPLITUDE = 10.0

FIG4A_ORDERS = (7, 8)
FIG4B_ORDERS = (2, 3)
FIG5A_TEMPERATURES = (0.1, 0.25, 0.5)
FIG5B_ALPHAS = (0.01, 0.02, 0.05, 0.1)
FIG5C_TEMPERATURES = (0.1, 0.25, 0.5, 1.0)


def _config(base: RunConfig, stem: str, **sections) -> RunConfig:
    merged = {key: dict(value) for key, value in BASE_PHYSICS.items()}
    for section, values in sections.items():
        merged.setdefault(section, {}).update(values)
    merged["output"] = {"directory": str(base.output_dir()), "stem": stem}
    return base.with_overrides(**merged)


def _slice_sweep(eps_min: float, eps_max: float, n_eps: int) -> Dict[str, Any]:
    return {
        "eps_min": eps_min, "eps_max": eps_max, "n_eps": n_eps,
        "amp_min": SLICE_AMPLITUDE, "amp_max": SLICE_AMPLITUDE, "n_amp": 1,
    }


def _numeric_slice(orch: PipelineOrchestrator):
    grid = spectra.fill_missing(orch.sweep())
    return spectra.slice_pattern(grid, SLICE_AMPLITUDE)


def _resonance_columns(orch, eps, p, orders, coupling) -> Dict[str, Any]:
    """Closed-form profile of each resonance, fitted with a constant baseline, next to the numeric slice"""
    shape, q = orch.shape(), orch.qubit().replace(amplitude=SLICE_AMPLITUDE)
    columns, gammas = {}, {}
    peak = analytic.transverse_peak if coupling == "transverse" else analytic.longitudinal_peak
    for n in orders:
        coupling_n = analytic.effective_coupling(analytic.delta_n(q, shape, n))
        near = np.abs(eps - n * shape.omega) <= q.delta
        fit = analytic.fit_gamma(eps[near], p[near], n, coupling_n, coupling, shape.omega, offset=True)
        columns[f"p_n{n}"] = peak(n * shape.omega - eps, coupling_n, fit.gamma) + fit.offset
        gammas[n] = {"gamma": fit.gamma, "offset": fit.offset, "rms": fit.rms, "delta_n": coupling_n}
    return {"columns": columns, "fits": gammas}


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------

def fig1(base: RunConfig) -> Dict[str, Any]:
    """Adiabatic levels, patterns and transforms for f1, f2, f3"""
    artifacts = {}
    for preset in ("f1", "f2", "f3"):
        cfg = _config(base, f"fig1_{preset}", drive={"preset": preset}, sweep=DESK_SWEEP)
        orch = PipelineOrchestrator(cfg, progress=True)
        pattern = orch.run("pattern")["artifacts"]["pattern"]
        orch.run("fft", input_path=pattern)
        levels = _config(base, f"fig1_{preset}", drive={"preset": preset}, sweep={"n_amp": 2})
        levels_orch = PipelineOrchestrator(levels)
        levels_orch.run_floquet()
        artifacts.update({f"{preset}_{k}": v for k, v in {**orch.artifacts, **levels_orch.artifacts}.items()})
    return {"artifacts": artifacts}


def fig2(base: RunConfig) -> Dict[str, Any]:
    """Root-search arcs and G(t, tau_eps) maps for f2 and f3"""
    artifacts, summary = {}, {}
    for preset in ("f2", "f3"):
        orch = PipelineOrchestrator(_config(base, f"fig2_{preset}", drive={"preset": preset}))
        result = orch.run("arcs")
        artifacts.update({f"{preset}_{k}": v for k, v in result["artifacts"].items()})
        summary[preset] = result["summary"]
    return {"artifacts": artifacts, "summary": summary}


def fig3(base: RunConfig) -> Dict[str, Any]:
    """Overlap of mixed-coupling patterns with the pure x and z patterns"""
    orch = PipelineOrchestrator(_config(base, "fig3", drive={"preset": "cos"}, sweep=OVERLAP_SWEEP), progress=True)
    return orch.run("overlap")


def fig4a(base: RunConfig) -> Dict[str, Any]:
    """sigma_x slice at A = 10 against fitted Lorentzians for n = 7, 8"""
    cfg = _config(base, "fig4a", sweep=_slice_sweep(0.0, 10.0, 201))
    orch = PipelineOrchestrator(cfg, progress=True)
    eps, p = _numeric_slice(orch)
    resonances = _resonance_columns(orch, eps, p, FIG4A_ORDERS, "transverse")
    return _write_slice(orch, eps, {"p_numeric": p, **resonances["columns"]}, resonances["fits"])


def fig4b(base: RunConfig) -> Dict[str, Any]:
    """sigma_z slice at A = 10 against fitted anti-symmetric peaks for n = 2, 3"""
    cfg = _config(base, "fig4b", sweep=_slice_sweep(0.0, 10.0, 201), bath={"coupling": "z"})
    orch = PipelineOrchestrator(cfg, progress=True)
    eps, p = _numeric_slice(orch)
    resonances = _resonance_columns(orch, eps, p, FIG4B_ORDERS, "longitudinal")
    return _write_slice(orch, eps, {"p_numeric": p, **resonances["columns"]}, resonances["fits"])


def fig4c(base: RunConfig) -> Dict[str, Any]:
    """x and z slices with the off-resonant background"""
    sweep = _slice_sweep(-10.0, 10.0, 201)
    x_orch = PipelineOrchestrator(_config(base, "fig4c", sweep=sweep), progress=True)
    z_orch = PipelineOrchestrator(_config(base, "fig4c", sweep=sweep, bath={"coupling": "z"}), progress=True)
    eps, p_x = _numeric_slice(x_orch)
    _, p_z = _numeric_slice(z_orch)
    delta = x_orch.qubit().delta
    bg = np.array([analytic.background(QubitParams(float(e), delta, SLICE_AMPLITUDE)) for e in eps])
    return _write_slice(x_orch, eps, {"p_x": p_x, "p_z": p_z, "p_background": bg}, {})


def _write_slice(orch, eps, columns, fits) -> Dict[str, Any]:
    frame = pd.DataFrame({"eps0": eps, **columns})
    comments = orch.comments() + [f"# n={n} {fit}" for n, fit in fits.items()]
    path = grid_files.write_table(orch.path("slice.csv"), frame, comments)
    return {"artifacts": {"slice": str(path)}, "summary": {"fits": fits}}


def _decay(base: RunConfig, stem: str, alpha: float, temperature: float, coupling: str = "x"):
    cfg = _config(
        base, stem, drive={"preset": "cos"}, sweep=DECAY_SWEEP,
        bath={"alpha": alpha, "temperature": temperature, "coupling": coupling},
    )
    orch = PipelineOrchestrator(cfg, progress=True)
    return orch, orch.decay_of(orch.sweep())


def fig5a(base: RunConfig) -> Dict[str, Any]:
    """Principal-arc profiles for alpha = 0.05 at several temperatures"""
    frames, fits = [], {}
    orch = None
    for temperature in FIG5A_TEMPERATURES:
        orch, (profile, fit) = _decay(base, "fig5a", 0.05, temperature)
        frames.append(pd.DataFrame({
            "temperature": temperature, "tau_eps": profile.tau_eps, "abs_W": profile.magnitude,
        }))
        fits[temperature] = {"rate": fit.rate, "uncertainty": fit.uncertainty}
    comments = orch.comments() + [f"# T={t} {fit}" for t, fit in fits.items()]
    path = grid_files.write_table(orch.path("profiles.csv"), pd.concat(frames, ignore_index=True), comments)
    return {"artifacts": {"profiles": str(path)}, "summary": {"fits": fits}}


def _rate_table(base: RunConfig, stem: str, rows: List[Dict[str, float]]) -> Dict[str, Any]:
    records = []
    orch = None
    for row in rows:
        record = dict(row)
        for coupling in ("x", "z"):
            orch, (_, fit) = _decay(base, stem, row["alpha"], row["temperature"], coupling)
            record[f"rate_{coupling}"] = fit.rate
            record[f"uncertainty_{coupling}"] = fit.uncertainty
        records.append(record)
    frame = pd.DataFrame.from_records(records)
    path = grid_files.write_table(orch.path("rates.csv"), frame, orch.comments())
    return {"artifacts": {"rates": str(path)}, "summary": {"rows": records}}


def fig5b(base: RunConfig) -> Dict[str, Any]:
    """Decay rate versus alpha at T = 0.5"""
    return _rate_table(base, "fig5b", [{"alpha": a, "temperature": 0.5} for a in FIG5B_ALPHAS])


def fig5c(base: RunConfig) -> Dict[str, Any]:
    """Decay rate versus temperature at alpha = 0.05"""
    return _rate_table(base, "fig5c", [{"alpha": 0.05, "temperature": t} for t in FIG5C_TEMPERATURES])


FIGURES: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "fig1": fig1,
    "fig2": fig2,
    "fig3": fig3,
    "fig4a": fig4a,
    "fig4b": fig4b,
    "fig4c": fig4c,
    "fig5a": fig5a,
    "fig5b": fig5b,
    "fig5c": fig5c,
}


def get_figures() -> List[str]:
    return sorted(FIGURES)


def reproduce(name: str, base: Optional[RunConfig] = None) -> Dict[str, Any]:
    """
    Run one canned figure; ``base`` only contributes output directory,
    worker count and solver knobs not fixed by the figure.

    Usage:
        reproduce("fig4a", load_run_config(None))
    """
    if name not in FIGURES:
        raise ParameterError(f"unknown figure {name!r}; choose from {get_figures()}")
    base = base or RunConfig()
    logger.log_stage_start("reproduce", {"figure": name, "output": str(Path(base.output_dir()))})
    result = FIGURES[name](base)
    return {"status": "completed", "figure": name, **result}
