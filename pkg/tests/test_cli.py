import json
import math

import numpy as np
import pytest

from src.core.errors import ParameterError
from src.main import build_parser, main
from src.analysis import analytic
from src.pipeline.figures import _resonance_columns, get_figures, reproduce
from src.pipeline.orchestrator import PipelineOrchestrator
from src.storage import grid_files
from src.utils.config import load_run_config


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, (json.loads(captured.out) if code == 0 else captured.err)


def test_pattern_and_fft_round_trip(capsys, fast_config_toml):
    code, result = _run(capsys, ["pattern", "--config", str(fast_config_toml)])
    assert code == 0
    assert result["status"] == "completed"
    pattern_path = result["artifacts"]["pattern"]

    grid = grid_files.read_pattern(pattern_path)
    assert grid.values.shape == (3, 3)
    assert np.all(np.isfinite(grid.values))
    assert grid.metadata["config"]["sweep"]["n_eps"] == 3

    copy = grid_files.write_pattern(pattern_path + ".copy", grid)
    assert copy.read_bytes() == open(pattern_path, "rb").read()

    code, result = _run(capsys, ["fft", "--config", str(fast_config_toml), "--input", pattern_path, "--pad", "1"])
    assert code == 0
    spec = grid_files.read_spectrum(result["artifacts"]["spectrum"])
    assert spec.values.shape == (3, 3)
    assert spec.metadata["pad"] == 1


def test_decay_on_coarse_grid_fails_cleanly(capsys, fast_config_toml):
    code, result = _run(capsys, ["pattern", "--config", str(fast_config_toml)])
    assert code == 0
    code, err = _run(capsys, ["decay", "--config", str(fast_config_toml), "--input", result["artifacts"]["pattern"]])
    assert code == 2
    assert "error:" in err


def test_arcs_for_antisymmetric_drive(capsys, fast_config_toml):
    code, result = _run(capsys, ["arcs", "--config", str(fast_config_toml), "--shape", "f3"])
    assert code == 0
    assert result["summary"]["symmetry"] == "antisymmetric"
    frame = grid_files.read_table(result["artifacts"]["arcs"])
    assert frame["branch"].nunique() >= 2
    assert set(frame["kind"]) == {"root"}


def test_arcs_for_cosine_include_generic(capsys, fast_config_toml):
    code, result = _run(capsys, ["arcs", "--config", str(fast_config_toml)])
    assert code == 0
    frame = grid_files.read_table(result["artifacts"]["arcs"])
    assert set(frame["kind"]) == {"root", "generic"}


def test_floquet_and_analytic(capsys, fast_config_toml):
    code, result = _run(capsys, ["floquet", "--config", str(fast_config_toml)])
    assert code == 0
    levels = grid_files.read_table(result["artifacts"]["quasienergies"])
    assert len(levels) == 3
    assert np.all(levels[["quasienergy_1", "quasienergy_2"]].abs() <= 0.5)

    code, result = _run(capsys, ["analytic", "--config", str(fast_config_toml)])
    assert code == 0
    assert result["summary"]["coupling"] == "transverse"
    assert "analytic" in result["artifacts"]

    code, result = _run(capsys, ["analytic", "--config", str(fast_config_toml), "--coupling", "z"])
    assert code == 0
    table = grid_files.read_table(result["artifacts"]["analytic_slice"])
    assert "p_n0" in table.columns


def test_analytic_rejects_mixed_coupling(capsys, fast_config_toml):
    code, _ = _run(capsys, ["analytic", "--config", str(fast_config_toml), "--coupling", "mixed:0.5"])
    assert code == 2


def test_bad_config_exit_status(capsys, tmp_path):
    code, err = _run(capsys, ["pattern", "--config", str(tmp_path / "missing.toml")])
    assert code == 2
    assert "config file not found" in err


def test_overlap_endpoints(fast_config_toml):
    cfg = load_run_config(str(fast_config_toml)).with_overrides(
        overlap={"thetas": [0.0, math.pi / 4, math.pi / 2]}
    )
    result = PipelineOrchestrator(cfg).run("overlap")
    table = grid_files.read_table(result["artifacts"]["overlap"])
    assert table["r_x"].iloc[0] == 1.0
    assert table["r_z"].iloc[-1] == 1.0
    assert table["r_x"].between(-1.0, 1.0 + 1e-12).all()


def test_parser_and_figures():
    args = build_parser().parse_args(["fft", "--pad", "4", "--workers", "2"])
    assert args.pad == 4 and args.workers == 2 and args.input is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["fft", "--pad", "3"])
    assert "fig4a" in get_figures()
    with pytest.raises(ParameterError):
        reproduce("fig9")


def test_resonance_columns_fit_raw_slice(fast_config_toml):
    orch = PipelineOrchestrator(load_run_config(str(fast_config_toml)))
    q = orch.qubit().replace(amplitude=10.0)
    delta_n = analytic.effective_coupling(analytic.delta_n(q, orch.shape(), 7))
    eps = np.linspace(6.0, 8.0, 81)
    p = analytic.transverse_peak(7 - eps, delta_n, 0.06) + 0.07

    result = _resonance_columns(orch, eps, p, (7,), "transverse")
    fit = result["fits"][7]
    assert fit["gamma"] == pytest.approx(0.06, rel=1e-5)
    assert fit["offset"] == pytest.approx(0.07, abs=1e-7)
    assert fit["rms"] < 1e-8
    assert np.allclose(result["columns"]["p_n7"], p, atol=1e-7)
