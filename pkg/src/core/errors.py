"""
Exceptions raised by the simulator.

Every error derives from ``LZSMError`` so the CLI can map them to a clean
exit status; the stdlib base classes keep ``except ValueError`` callers working.
"""

from typing import Any, Dict, Optional


class LZSMError(Exception):
    """Base class for all simulator errors"""

    @property
    def details(self) -> Dict[str, Any]:
        """Scalar diagnostics for logs and span attributes"""
        return {}


class ParameterError(LZSMError, ValueError):
    """Invalid physical or numerical input"""


class IntegrationError(LZSMError, RuntimeError):
    """The ODE integrator gave up; ``time`` is where it stopped"""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t={time:.6g})")
        self.time = time

    @property
    def details(self) -> Dict[str, Any]:
        return {"time": self.time}


class SolverError(LZSMError, RuntimeError):
    """Linear steady-state solve failed or is not meaningful"""

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message)
        self.condition = condition

    @property
    def details(self) -> Dict[str, Any]:
        return {} if self.condition is None else {"condition": self.condition}


class SweepError(LZSMError):
    """Too many grid points failed during a sweep"""

    def __init__(self, message: str, summary: Dict[str, Any]):
        super().__init__(message)
        self.summary = summary

    @property
    def details(self) -> Dict[str, Any]:
        return {k: self.summary[k] for k in ("points", "failed", "failed_fraction") if k in self.summary}


class ConfigError(LZSMError, ValueError):
    """Configuration could not be parsed or validated"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.line = line

    @property
    def details(self) -> Dict[str, Any]:
        return {k: v for k, v in (("field", self.field), ("line", self.line)) if v is not None}
