"""
OpenTelemetry spans around pipeline stages (floquet solve, Liouvillian
assembly, steady state, sweep, fft, fits). Spans are exported to the console
only when ENABLE_TRACING is set.
"""

import time
from contextlib import contextmanager
from typing import Any, Dict, Optional

import numpy as np
from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter

from src.utils.config import Config

resource = Resource(attributes={"service.name": "lzsm-simulator"})

trace.set_tracer_provider(TracerProvider(resource=resource))
tracer_provider = trace.get_tracer_provider()

if Config.ENABLE_TRACING:
    tracer_provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter()))

tracer = trace.get_tracer(__name__)


def _attribute(value: Any):
    """Span attributes must be str, bool, int, float or homogeneous sequences of them"""
    if isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


class PipelineTracer:
    def __init__(self, component: str):
        self.component = component
        self.tracer = tracer

    @contextmanager
    def trace_operation(self, operation_name: str, attributes: Optional[Dict[str, Any]] = None):
        """
        Usage:
            with tracer.trace_operation("steady_state", {"sidebands": 5}):
                ...

        Diagnostics carried by a raised LZSMError (condition number, failure
        time) are copied onto the span before it is marked failed.
        """
        with self.tracer.start_as_current_span(f"{self.component}.{operation_name}") as span:
            span.set_attribute("lzsm.component", self.component)
            span.set_attribute("lzsm.stage", operation_name)
            for key, value in (attributes or {}).items():
                span.set_attribute(f"lzsm.{key}", _attribute(value))

            start_time = time.perf_counter()
            try:
                yield span
            except Exception as e:
                for key, value in getattr(e, "details", {}).items():
                    span.set_attribute(f"error.{key}", _attribute(value))
                span.record_exception(e)
                span.set_status(trace.Status(trace.StatusCode.ERROR, str(e)))
                raise
            finally:
                span.set_attribute("duration_ms", (time.perf_counter() - start_time) * 1000)
