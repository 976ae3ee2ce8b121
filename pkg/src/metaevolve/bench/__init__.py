"""Benchmark-protocol harness: campaigns, statistics, significance, reports."""

from __future__ import annotations

from .campaign import (
    CampaignConfig,
    CampaignResult,
    TimingReport,
    default_max_fe,
    default_pop_size,
    load_cell_logs,
    measure_t1,
    run_campaign,
    run_path,
    timing_report,
)
from .reports import compute_marks, emit_reports, format_cell, parse_summary_long, sci, tally_marks
from .stats import StatsSummary, significance_mark, summarize

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "StatsSummary",
    "TimingReport",
    "compute_marks",
    "default_max_fe",
    "default_pop_size",
    "emit_reports",
    "format_cell",
    "load_cell_logs",
    "measure_t1",
    "parse_summary_long",
    "run_campaign",
    "run_path",
    "sci",
    "significance_mark",
    "summarize",
    "tally_marks",
    "timing_report",
]
