"""Observability: logging, tracing, metrics"""