"""Deterministic multi-agent safety simulator with proactive adversary
detection and resilient QP control."""

__version__ = "0.1.0"
