"""
Configuration management for the LZSM simulator.

Two layers:
- ``Config``: process settings from environment variables (``.env`` aware).
- ``RunConfig``: the physics + solver description of one run, loaded from a
  TOML file and validated with pydantic.
"""

import json
import math
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.errors import ConfigError

# Load environment variables from .env file
load_dotenv()


class Config:
    """Central configuration class for process-wide settings"""

    # Project paths
    PROJECT_ROOT = Path(__file__).parent.parent.parent
    OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", str(PROJECT_ROOT / "data" / "outputs")))
    LOG_DIR = Path(os.getenv("LOG_DIR", str(PROJECT_ROOT / "logs")))

    # Observability
    LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()
    ENABLE_TRACING = os.getenv("ENABLE_TRACING", "false").lower() == "true"
    ENABLE_METRICS = os.getenv("ENABLE_METRICS", "true").lower() == "true"

    # Sweep worker pool
    WORKERS = int(os.getenv("LZSM_WORKERS", "1"))

    @classmethod
    def validate(cls):
        """Validate settings and create the directories we write into"""
        if cls.WORKERS < 1:
            raise ConfigError("LZSM_WORKERS must be >= 1", field="LZSM_WORKERS")

        cls.LOG_DIR.mkdir(parents=True, exist_ok=True)
        cls.OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

        return True


Config.validate()


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class QubitSection(_Section):
    epsilon0: float = 0.0
    delta: float = Field(0.5, ge=0.0)
    amplitude: float = 10.0


class DriveSection(_Section):
    preset: Optional[str] = "cos"
    # explicit harmonics as [k, a_k, b_k] triples; overrides preset when given
    harmonics: Optional[List[Tuple[int, float, float]]] = None
    omega: float = Field(1.0, gt=0.0)

    @model_validator(mode="after")
    def _known_preset(self):
        from src.core.model import PRESETS

        if self.harmonics is None and self.preset not in PRESETS:
            raise ValueError(f"unknown drive preset {self.preset!r}; choose from {sorted(PRESETS)}")
        return self


class BathSection(_Section):
    alpha: float = Field(1e-3, ge=0.0)
    temperature: float = Field(0.1, gt=0.0)
    coupling: str = "x"

    @field_validator("coupling")
    @classmethod
    def _coupling_syntax(cls, value: str) -> str:
        from src.core.model import parse_coupling

        parse_coupling(value)
        return value


class SweepSection(_Section):
    eps_min: float = -10.0
    eps_max: float = 10.0
    n_eps: int = Field(201, ge=1)
    amp_min: float = 0.0
    amp_max: float = 15.0
    n_amp: int = Field(151, ge=1)


class SolverSection(_Section):
    sidebands: int = Field(5, ge=0, le=10)
    k_modes: int = Field(64, ge=1)
    k_x: int = Field(32, ge=1)
    samples: int = Field(512, ge=4)
    tolerance: float = Field(1e-10, gt=0.0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.samples & (self.samples - 1):
            raise ValueError("samples must be a power of two")
        if self.samples < 4 * (self.k_modes + 1):
            raise ValueError("samples must be >= 4 * (k_modes + 1)")
        if self.sidebands > self.k_x // 2:
            raise ValueError("sidebands must not exceed k_x / 2")
        return self


class FFTSection(_Section):
    pad: Literal[1, 2, 4] = 2
    subtract_mean: bool = True


class DecaySection(_Section):
    window_center: Optional[float] = None
    window_halfwidth: Optional[float] = None


class AnalyticSection(_Section):
    gamma: float = Field(0.01, gt=0.0)
    n_max: int = Field(20, ge=1)
    include_background: bool = False


class OverlapSection(_Section):
    # mixing angles in radians; k pi / 16 keeps both endpoints exact
    thetas: List[float] = Field(default_factory=lambda: [k * math.pi / 16 for k in range(9)])
    subtract_mean: bool = False


class OutputSection(_Section):
    directory: Optional[str] = None
    stem: str = "lzsm"


class RunConfig(_Section):
    """Everything needed to reproduce one artifact"""

    qubit: QubitSection = QubitSection()
    drive: DriveSection = DriveSection()
    bath: BathSection = BathSection()
    sweep: SweepSection = SweepSection()
    solver: SolverSection = SolverSection()
    fft: FFTSection = FFTSection()
    analytic: AnalyticSection = AnalyticSection()
    decay: DecaySection = DecaySection()
    overlap: OverlapSection = OverlapSection()
    output: OutputSection = OutputSection()
    workers: int = Field(default_factory=lambda: Config.WORKERS, ge=1)
    deterministic: bool = True

    def to_json(self) -> str:
        return self.model_dump_json()

    def output_dir(self) -> Path:
        return Path(self.output.directory) if self.output.directory else Config.OUTPUT_DIR

    def with_overrides(self, **sections: Dict[str, Any]) -> "RunConfig":
        """Return a copy with selected section fields replaced, re-validated"""
        data = self.model_dump()
        for section, values in sections.items():
            if isinstance(data.get(section), dict):
                data[section].update(values)
            else:
                data[section] = values
        return build_run_config(data)


def build_run_config(data: Dict[str, Any], source: str = "<dict>") -> RunConfig:
    """Validate a raw mapping, turning pydantic errors into ConfigError"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{source}: {field}: {first['msg']}", field=field) from e


def load_run_config(path: Optional[str]) -> RunConfig:
    """
    Load a RunConfig from a TOML file.

    A missing path yields the all-defaults configuration.

    Usage:
        cfg = load_run_config("runs/fig4a.toml")
    """
    if path is None:
        return RunConfig()

    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        # lineno only exists on newer Pythons; older ones put it in the message
        line = getattr(e, "lineno", None)
        if line is None:
            match = re.search(r"at line (\d+)", str(e))
            line = int(match.group(1)) if match else None
        raise ConfigError(f"{path}: {e}", line=line) from e

    return build_run_config(data, source=str(path))


def config_comment_block(cfg: RunConfig) -> List[str]:
    """Config echoed as '# '-prefixed lines for CSV headers"""
    pretty = json.dumps(json.loads(cfg.to_json()), indent=2, sort_keys=True)
    return [f"# {line}" for line in pretty.splitlines()]
