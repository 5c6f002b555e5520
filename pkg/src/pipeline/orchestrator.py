"""
Pipeline orchestrator.

Turns a RunConfig into solver objects, runs one subcommand's stages and
writes the artifacts. Every artifact carries the full config as metadata.
"""

import json
import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.analysis import analytic, arcs, spectra
from src.analysis.grids import PatternGrid, SpectrumGrid, uniform_axis
from src.core.errors import ParameterError
from src.core.floquet import quasienergy_scan
from src.core.model import (
    BathParams,
    DrivingShape,
    QubitParams,
    adiabatic_energies,
    parse_coupling,
    preset_shape,
    shape_from_triples,
    shape_symmetry,
)
from src.core.redfield import SolverSettings
from src.observability.logger import SolverLogger
from src.observability.metrics import get_metrics_collector
from src.observability.tracer import PipelineTracer
from src.storage import grid_files
from src.utils.config import RunConfig, config_comment_block

logger = SolverLogger("orchestrator")
tracer = PipelineTracer("orchestrator")
metrics = get_metrics_collector()

ARC_TAU_POINTS = 257


class PipelineOrchestrator:
    """
    Runs the subcommand pipelines for one configuration.

    Usage:
        result = PipelineOrchestrator(load_run_config("run.toml")).run("pattern")
    """

    def __init__(self, cfg: RunConfig, progress: bool = False):
        self.cfg = cfg
        self.progress = progress
        self.out_dir = cfg.output_dir()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: Dict[str, str] = {}

    # ------------------------------------------------------------------
    # Config -> physics objects
    # ------------------------------------------------------------------

    def shape(self) -> DrivingShape:
        drive = self.cfg.drive
        if drive.harmonics is not None:
            return shape_from_triples(drive.harmonics, drive.omega)
        return preset_shape(drive.preset, drive.omega)

    def qubit(self) -> QubitParams:
        q = self.cfg.qubit
        return QubitParams(q.epsilon0, q.delta, q.amplitude)

    def bath(self, theta: Optional[float] = None) -> BathParams:
        b = self.cfg.bath
        theta = parse_coupling(b.coupling) if theta is None else theta
        return BathParams.from_temperature(b.alpha, b.temperature, theta)

    def settings(self) -> SolverSettings:
        s = self.cfg.solver
        return SolverSettings(
            tolerance=s.tolerance, samples=s.samples, k_modes=s.k_modes, k_x=s.k_x, sidebands=s.sidebands
        )

    def eps_axis(self) -> np.ndarray:
        s = self.cfg.sweep
        return uniform_axis(s.eps_min, s.eps_max, s.n_eps)

    def amp_axis(self) -> np.ndarray:
        s = self.cfg.sweep
        return uniform_axis(s.amp_min, s.amp_max, s.n_amp)

    def provenance(self) -> Dict[str, Any]:
        return {"config": json.loads(self.cfg.to_json())}

    def path(self, suffix: str) -> Path:
        return self.out_dir / f"{self.cfg.output.stem}_{suffix}"

    def _record(self, key: str, path: Path):
        self.artifacts[key] = str(path)

    def comments(self) -> List[str]:
        return config_comment_block(self.cfg)

    # ------------------------------------------------------------------
    # Building blocks
    # ------------------------------------------------------------------

    def sweep(self, theta: Optional[float] = None, amp_axis: Optional[np.ndarray] = None) -> PatternGrid:
        return spectra.sweep_pattern(
            self.qubit(),
            self.shape(),
            self.bath(theta),
            self.eps_axis(),
            self.amp_axis() if amp_axis is None else amp_axis,
            self.settings(),
            workers=self.cfg.workers,
            progress=self.progress,
            metadata=self.provenance(),
        )

    def load_or_sweep(self, input_path: Optional[str]) -> PatternGrid:
        if input_path:
            return grid_files.read_pattern(input_path)
        return self.sweep()

    def transform(self, grid: PatternGrid) -> SpectrumGrid:
        return spectra.fourier2d(grid, self.cfg.fft.pad, self.cfg.fft.subtract_mean)

    def principal_arc(self, tau_eps: np.ndarray) -> arcs.ArcCurve:
        """
        2F(tau_eps/2) for symmetric drives; otherwise the root-search branch
        covering the most of the decay window.
        """
        shape = self.shape()
        if shape_symmetry(shape) == "symmetric":
            return arcs.generic_curves(shape, tau_eps)[0]

        curves = arcs.arc_full(shape, tau_eps)
        lo, hi = shape.period / 8, 3 * shape.period / 8
        return max(curves, key=lambda c: int(np.sum((c.tau_eps >= lo) & (c.tau_eps <= hi))))

    def decay_of(self, grid: PatternGrid):
        spec = self.transform(grid)
        shape = self.shape()
        positive = spec.tau_eps[(spec.tau_eps >= 0) & (spec.tau_eps <= shape.period)]
        if positive.size < 2:
            raise ParameterError("spectrum does not resolve tau_eps in [0, T]; refine the eps0 grid")
        tau_eps = np.linspace(0.0, shape.period, ARC_TAU_POINTS)
        profile = spectra.sample_arc(spec, self.principal_arc(tau_eps))
        window = None
        if self.cfg.decay.window_center is not None:
            half = self.cfg.decay.window_halfwidth or shape.period / 8
            window = (self.cfg.decay.window_center - half, self.cfg.decay.window_center + half)
        return profile, spectra.fit_decay(profile, window, shape.omega)

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def run_floquet(self) -> Dict[str, Any]:
        q, shape = self.qubit(), self.shape()
        amplitudes = self.amp_axis()
        s = self.cfg.solver
        energies = quasienergy_scan(q, shape, amplitudes, s.tolerance, s.samples, s.k_modes)
        frame = pd.DataFrame({"A": amplitudes, "quasienergy_1": energies[:, 0], "quasienergy_2": energies[:, 1]})
        self._record("quasienergies", grid_files.write_table(self.path("quasienergies.csv"), frame, self.comments()))

        t = np.linspace(0.0, shape.period, 257)
        levels = adiabatic_energies(q, shape, t)
        adiabatic = pd.DataFrame({
            "t": t, "E_minus": levels[:, 0], "E_plus": levels[:, 1], "F": shape.integral(t), "f": shape(t),
        })
        self._record("adiabatic", grid_files.write_table(self.path("adiabatic.csv"), adiabatic, self.comments()))
        return {"amplitudes": len(amplitudes)}

    def run_pattern(self) -> Dict[str, Any]:
        grid = self.sweep()
        self._record("pattern", grid_files.write_pattern(self.path("pattern.lzsm"), grid))
        self._record("pattern_csv", grid_files.write_table(
            self.path("pattern.csv"), grid_files.pattern_frame(grid), self.comments()
        ))
        return {"points": int(grid.values.size), "failed_points": grid.metadata.get("failed_points", 0)}

    def run_fft(self, input_path: Optional[str] = None) -> Dict[str, Any]:
        grid = self.load_or_sweep(input_path)
        spec = self.transform(grid)
        spec = SpectrumGrid(spec.tau_eps, spec.tau_amp, spec.values, {**spec.metadata, **self.provenance()})
        self._record("spectrum", grid_files.write_spectrum(self.path("spectrum.lzsm"), spec))
        self._record("spectrum_csv", grid_files.write_table(
            self.path("spectrum.csv"), grid_files.spectrum_frame(spec), self.comments()
        ))
        return {"shape": list(spec.values.shape), "pad": self.cfg.fft.pad}

    def run_arcs(self) -> Dict[str, Any]:
        shape = self.shape()
        tau_eps = np.linspace(0.0, shape.period, ARC_TAU_POINTS)
        curves = arcs.arc_full(shape, tau_eps)
        frame = arcs.arcs_frame(curves).assign(kind="root")
        if shape_symmetry(shape) == "symmetric":
            generic = arcs.arcs_frame(arcs.generic_curves(shape, tau_eps, max_order=2)).assign(kind="generic")
            frame = pd.concat([frame, generic], ignore_index=True)
        self._record("arcs", grid_files.write_table(self.path("arcs.csv"), frame, self.comments()))

        t = np.linspace(0.0, shape.period, 129)
        tt, te = np.meshgrid(t, tau_eps[::2], indexing="ij")
        g_map = pd.DataFrame({
            "t": tt.ravel(), "tau_eps": te.ravel(), "G": arcs.integral_difference(shape, tt, te).ravel(),
        })
        self._record("arc_map", grid_files.write_table(self.path("arc_map.csv"), g_map, self.comments()))
        return {"branches": len(curves), "symmetry": shape_symmetry(shape)}

    def run_analytic(self) -> Dict[str, Any]:
        theta = parse_coupling(self.cfg.bath.coupling)
        if theta not in (0.0, math.pi / 2):
            raise ParameterError("closed-form patterns exist for 'x' or 'z' coupling only")
        coupling = "transverse" if theta == 0.0 else "longitudinal"
        a = self.cfg.analytic
        q, shape = self.qubit(), self.shape()

        result = analytic.analytic_pattern(
            self.eps_axis(), self.amp_axis(), shape, q.delta, a.gamma, coupling, a.n_max, a.include_background
        )
        if coupling == "transverse":
            grid = PatternGrid(result.eps, result.amp, result.values, {**result.metadata, **self.provenance()})
            self._record("analytic", grid_files.write_pattern(self.path("analytic.lzsm"), grid))
            eps, values = spectra.slice_pattern(grid, q.amplitude)
            frame = pd.DataFrame({"eps0": eps, "p_analytic": values})
        else:
            frame = pd.DataFrame({"eps0": self.eps_axis()})
            for n, grid in result.items():
                frame[f"p_n{n}"] = spectra.slice_pattern(grid, q.amplitude)[1]
        self._record("analytic_slice", grid_files.write_table(
            self.path("analytic_slice.csv"), frame, self.comments()
        ))
        return {"coupling": coupling, "gamma": a.gamma}

    def run_decay(self, input_path: Optional[str] = None) -> Dict[str, Any]:
        grid = self.load_or_sweep(input_path)
        profile, fit = self.decay_of(grid)
        frame = pd.DataFrame({"tau_eps": profile.tau_eps, "abs_W": profile.magnitude})
        comments = self.comments() + [
            f"# rate={fit.rate:.8g} uncertainty={fit.uncertainty:.3g} "
            f"window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}] rms={fit.residual_rms:.3g}"
        ]
        self._record("decay", grid_files.write_table(self.path("decay.csv"), frame, comments))
        return {"rate": fit.rate, "uncertainty": fit.uncertainty, "dropped": profile.dropped}

    def run_overlap(self) -> Dict[str, Any]:
        thetas = [float(t) for t in self.cfg.overlap.thetas]
        patterns = {theta: spectra.fill_missing(self.sweep(theta)) for theta in thetas}
        for ref in (0.0, math.pi / 2):
            if ref not in patterns:
                patterns[ref] = spectra.fill_missing(self.sweep(ref))

        subtract = self.cfg.overlap.subtract_mean
        frame = pd.DataFrame({
            "theta": thetas,
            "r_x": [spectra.pattern_overlap(patterns[t], patterns[0.0], subtract) for t in thetas],
            "r_z": [spectra.pattern_overlap(patterns[t], patterns[math.pi / 2], subtract) for t in thetas],
        })
        self._record("overlap", grid_files.write_table(self.path("overlap.csv"), frame, self.comments()))
        return {"thetas": len(thetas)}

    # ------------------------------------------------------------------

    def run(self, subcommand: str, **options) -> Dict[str, Any]:
        """Run one subcommand; returns status, artifacts and a summary"""
        handlers = {
            "floquet": self.run_floquet,
            "pattern": self.run_pattern,
            "fft": self.run_fft,
            "arcs": self.run_arcs,
            "analytic": self.run_analytic,
            "decay": self.run_decay,
            "overlap": self.run_overlap,
        }
        if subcommand not in handlers:
            raise ParameterError(f"unknown subcommand {subcommand!r}")

        start_time = time.perf_counter()
        logger.log_stage_start(subcommand, {"stem": self.cfg.output.stem, "workers": self.cfg.workers})

        with tracer.trace_operation(subcommand, {"stem": self.cfg.output.stem}):
            try:
                summary = handlers[subcommand](**options)
            except Exception as e:
                metrics.record_counter("runs_failed")
                logger.log_error(e, {"subcommand": subcommand})
                raise

        duration_ms = (time.perf_counter() - start_time) * 1000
        metrics.record_duration(subcommand, duration_ms)
        metrics.record_counter("runs_completed")
        metrics_path = metrics.save_metrics(self.path("metrics.json"))
        if metrics_path:
            self._record("metrics", metrics_path)

        logger.log_stage_complete(subcommand, summary, duration_ms)
        return {
            "status": "completed",
            "subcommand": subcommand,
            "artifacts": dict(self.artifacts),
            "summary": summary,
            "duration_ms": round(duration_ms, 1),
        }
