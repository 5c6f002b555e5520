import json

import pytest

from src.core.errors import ConfigError, IntegrationError, ParameterError, SolverError, SweepError
from src.observability.logger import SolverLogger
from src.observability.metrics import MetricsCollector
from src.observability.tracer import PipelineTracer
from src.utils.config import Config


def test_sweep_bookkeeping():
    collector = MetricsCollector()
    collector.record_sweep(solved=95, failed=5, positivity_warnings=2, duration_ms=12.0)
    collector.record_sweep(solved=100, failed=0, positivity_warnings=0, duration_ms=8.0)

    assert collector.counters["points_solved"] == 195
    assert collector.counters["positivity_warnings"] == 2
    assert collector.failed_fraction() == pytest.approx(5 / 200)

    summary = collector.get_summary()
    assert summary["stages"]["sweep"] == {"count": 2, "total_ms": 20.0, "mean_ms": 10.0}
    assert len(collector.samples["sweep_failed_fraction"]) == 2


def test_save_metrics(tmp_path, monkeypatch):
    collector = MetricsCollector()
    collector.merge_counters({"positivity_warnings": 3})
    collector.record_duration("fft", 4.0)

    monkeypatch.setattr(Config, "ENABLE_METRICS", True)
    path = collector.save_metrics(tmp_path / "metrics.json")
    data = json.loads(path.read_text())
    assert data["summary"]["counters"] == {"positivity_warnings": 3}
    assert data["samples"]["fft_duration_ms"][0]["value"] == 4.0

    monkeypatch.setattr(Config, "ENABLE_METRICS", False)
    assert collector.save_metrics(tmp_path / "other.json") is None
    assert not (tmp_path / "other.json").exists()

    collector.reset()
    assert collector.failed_fraction() == 0.0


def test_error_details():
    assert ParameterError("bad").details == {}
    assert IntegrationError("stiff", time=1.5).details == {"time": 1.5}
    assert SolverError("singular", condition=1e13).details == {"condition": 1e13}
    assert SolverError("singular").details == {}
    assert ConfigError("bad", field="solver.k_x").details == {"field": "solver.k_x"}
    summary = {"points": 4, "failed": 2, "failed_fraction": 0.5, "failures": []}
    assert SweepError("too many", summary).details == {"points": 4, "failed": 2, "failed_fraction": 0.5}


def test_span_reraises_solver_errors():
    tracer = PipelineTracer("test")
    with tracer.trace_operation("ok", {"sidebands": 5, "label": "x"}) as span:
        assert span is not None
    with pytest.raises(SolverError):
        with tracer.trace_operation("steady_state"):
            raise SolverError("ill-conditioned steady-state system", condition=1e13)


def test_solver_logger_accepts_errors():
    log = SolverLogger("test")
    log.log_stage_start("sweep", {"n_eps": 3})
    log.log_stage_complete("sweep", {"failed": 0}, 1.25)
    log.log_diagnostic("positivity_violation", min_eigenvalue=-2e-3)
    try:
        raise SolverError("singular", condition=1e13)
    except SolverError as e:
        log.log_error(e, {"epsilon0": 1.0})
