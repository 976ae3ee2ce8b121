"""Constrained evolutionary optimization with interpreter-executed update rules,
an LLM-driven outer design loop, and a statistics-first benchmark harness."""

__version__ = "0.1.0"
