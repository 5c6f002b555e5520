import pytest

from src.core.model import BathParams, QubitParams, preset_shape
from src.core.redfield import SolverSettings


@pytest.fixture
def cos_shape():
    return preset_shape("cos")


@pytest.fixture
def qubit():
    return QubitParams(epsilon0=1.3, delta=0.5, amplitude=5.0)


@pytest.fixture
def bath():
    return BathParams.from_temperature(alpha=1e-3, temperature=0.1)


@pytest.fixture
def fast_settings():
    # coarse grids for unit tests that only check bookkeeping
    return SolverSettings(tolerance=1e-9, samples=256, k_modes=32, k_x=16, sidebands=4)


@pytest.fixture
def fast_config_toml(tmp_path):
    """A 3 x 3 sweep small enough for CLI smoke tests"""
    path = tmp_path / "run.toml"
    path.write_text(
        "\n".join([
            "[qubit]",
            "delta = 0.5",
            "amplitude = 2.0",
            "",
            "[bath]",
            "alpha = 0.01",
            "temperature = 0.1",
            'coupling = "x"',
            "",
            "[sweep]",
            "eps_min = -1.0",
            "eps_max = 1.0",
            "n_eps = 3",
            "amp_min = 1.0",
            "amp_max = 2.0",
            "n_amp = 3",
            "",
            "[solver]",
            "sidebands = 4",
            "k_modes = 32",
            "k_x = 16",
            "samples = 256",
            "tolerance = 1e-9",
            "",
            "[output]",
            f'directory = "{(tmp_path / "out").as_posix()}"',
            'stem = "smoke"',
            "",
        ])
    )
    return path
