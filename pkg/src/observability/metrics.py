"""
Run metrics: solved and failed grid points, positivity warnings and stage
durations. Written as metrics.json next to the CLI artifacts.
"""

import json
from collections import defaultdict
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from src.observability.logger import setup_logger
from src.utils.config import Config

logger = setup_logger("metrics")


class MetricsCollector:
    """
    Process-wide counters plus timestamped samples (durations, gauges).

    Sweep workers report counters only; ``merge_counters`` folds them into
    the parent collector.
    """

    def __init__(self):
        self.samples: Dict[str, List[Dict]] = defaultdict(list)
        self.counters: Dict[str, int] = defaultdict(int)

    def _sample(self, key: str, value: float):
        self.samples[key].append({"timestamp": datetime.now().isoformat(), "value": float(value)})

    def record_counter(self, metric_name: str, increment: int = 1):
        """
        Usage:
            metrics.record_counter("points_solved", 120)
        """
        self.counters[metric_name] += increment
        logger.debug("metric_counter", metric=metric_name, value=self.counters[metric_name])

    def record_duration(self, stage: str, duration_ms: float):
        self._sample(f"{stage}_duration_ms", duration_ms)

    def record_gauge(self, metric_name: str, value: float):
        self._sample(metric_name, value)
        logger.debug("metric_gauge", metric=metric_name, value=value)

    def record_sweep(self, solved: int, failed: int, positivity_warnings: int, duration_ms: float):
        """Book one finished (eps0, A) sweep"""
        self.record_counter("points_solved", solved)
        self.record_counter("points_failed", failed)
        if positivity_warnings:
            self.merge_counters({"positivity_warnings": positivity_warnings})
        total = solved + failed
        self.record_gauge("sweep_failed_fraction", failed / total if total else 0.0)
        self.record_duration("sweep", duration_ms)

    def merge_counters(self, counters: Dict[str, int]):
        for key, value in counters.items():
            self.counters[key] += value

    def failed_fraction(self) -> float:
        total = self.counters.get("points_solved", 0) + self.counters.get("points_failed", 0)
        return self.counters.get("points_failed", 0) / total if total else 0.0

    def get_summary(self) -> Dict:
        stages = {}
        for key, values in self.samples.items():
            if key.endswith("_duration_ms") and values:
                durations = [v["value"] for v in values]
                stages[key[: -len("_duration_ms")]] = {
                    "count": len(durations),
                    "total_ms": round(sum(durations), 2),
                    "mean_ms": round(sum(durations) / len(durations), 2),
                }
        return {
            "counters": dict(self.counters),
            "failed_fraction": self.failed_fraction(),
            "stages": stages,
            "generated_at": datetime.now().isoformat(),
        }

    def save_metrics(self, path: Optional[Path] = None) -> Optional[Path]:
        """Write the summary and raw samples as JSON; no-op when ENABLE_METRICS is off"""
        if not Config.ENABLE_METRICS:
            return None

        path = Path(path) if path else Config.OUTPUT_DIR / "metrics.json"
        data = {
            "summary": self.get_summary(),
            "samples": {key: list(values) for key, values in self.samples.items()},
        }
        with open(path, "w") as f:
            json.dump(data, f, indent=2)

        logger.info("metrics_saved", file=str(path))
        return path

    def reset(self):
        self.samples.clear()
        self.counters.clear()


# Global metrics collector instance
_metrics_collector = MetricsCollector()


def get_metrics_collector() -> MetricsCollector:
    """Get the global metrics collector instance"""
    return _metrics_collector
