import math

import pytest

from src.core.errors import ConfigError
from src.utils.config import RunConfig, build_run_config, config_comment_block, load_run_config


def test_defaults():
    cfg = load_run_config(None)
    assert cfg.qubit.delta == 0.5
    assert cfg.solver.sidebands == 5
    assert cfg.fft.pad == 2
    assert cfg.overlap.thetas[0] == 0.0
    assert cfg.overlap.thetas[-1] == math.pi / 2


def test_load_toml(fast_config_toml):
    cfg = load_run_config(str(fast_config_toml))
    assert cfg.sweep.n_eps == 3
    assert cfg.solver.samples == 256
    assert cfg.output.stem == "smoke"
    assert cfg.output_dir().name == "out"


def test_syntax_error_reports_line(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[qubit]\ndelta = 0.5\namplitude = = 3\n")
    with pytest.raises(ConfigError) as info:
        load_run_config(str(path))
    assert info.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.toml"))


@pytest.mark.parametrize(
    "data, field",
    [
        ({"solver": {"samples": 500}}, "solver"),
        ({"solver": {"sidebands": 11}}, "solver.sidebands"),
        ({"solver": {"sidebands": 9, "k_x": 16}}, "solver"),
        ({"bath": {"coupling": "y"}}, "bath.coupling"),
        ({"bath": {"temperature": 0.0}}, "bath.temperature"),
        ({"drive": {"preset": "square"}}, "drive"),
        ({"fft": {"pad": 3}}, "fft.pad"),
        ({"qubit": {"unknown": 1.0}}, "qubit.unknown"),
    ],
)
def test_invalid_fields(data, field):
    with pytest.raises(ConfigError) as info:
        build_run_config(data)
    assert info.value.field == field


def test_explicit_harmonics_override_preset():
    cfg = build_run_config({"drive": {"preset": "nonsense", "harmonics": [[1, 0.0, 1.0], [3, 0.2, 0.0]]}})
    assert cfg.drive.harmonics[1] == (3, 0.2, 0.0)


def test_with_overrides_revalidates():
    cfg = RunConfig()
    changed = cfg.with_overrides(bath={"coupling": "z"}, workers=3)
    assert changed.bath.coupling == "z"
    assert changed.bath.alpha == cfg.bath.alpha
    assert changed.workers == 3
    with pytest.raises(ConfigError):
        cfg.with_overrides(solver={"sidebands": 20})


def test_comment_block():
    lines = config_comment_block(RunConfig())
    assert lines[0] == "# {"
    assert all(line.startswith("# ") for line in lines)
    assert any('"sidebands": 5' in line for line in lines)
