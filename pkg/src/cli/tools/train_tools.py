#!/usr/bin/env python3
"""
Training and benchmark tools for the Pareto CLI
"""

import os
import sys
from typing import Tuple

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../..')))

from src.cli.tools.model_tools import EXIT_OK, EXIT_RUNTIME, exit_code_for
from src.functions.model_functions import benchmark_from_config, train_model


def train_impl(config_path: str) -> Tuple[str, int]:
    """Train from a run config and summarize the outcome"""
    result = train_model(config_path)
    if result["status"] != "success":
        return f"❌ {result['error']}", exit_code_for(result)
    per_level = ", ".join(f"L{k}: {n}" for k, n in result["points_per_level"].items())
    return (
        f"✅ Trained {result['method']} on {result['problem']}: {result['levels']} levels "
        f"({per_level}), eq_tol {result['eq_tol']:.3e}, {result['elapsed']:.1f}s\n"
        f"📄 Model: {result['model_file']}\n"
        f"📄 Trace: {result['trace_file']} ({result['trace_rows']} rows)"
    ), EXIT_OK


def _format_summary(df) -> str:
    lines = [f"{'method':<8} {'n_max':>5} {'mean_err':>12} {'std_err':>12} {'repeats':>7}"]
    for row in df.itertuples(index=False):
        mean = "-" if row.mean_err is None or row.mean_err != row.mean_err else f"{row.mean_err:.6f}"
        std = "-" if row.std_err is None or row.std_err != row.std_err else f"{row.std_err:.6f}"
        lines.append(f"{row.method:<8} {row.n_max:>5} {mean:>12} {std:>12} {row.repeats:>7}")
    return "\n".join(lines)


def benchmark_impl(config_path: str) -> Tuple[str, int]:
    """Run a benchmark; a summary with too many failed runs exits as a runtime failure"""
    result = benchmark_from_config(config_path)
    if result["status"] != "success":
        return f"❌ {result['error']}", exit_code_for(result)
    message = (
        f"📊 {result['problem']} mean Err\n{_format_summary(result['summary'])}\n"
        f"📄 Summary: {result['summary_file']}\n📄 Runs: {result['runs_file']}"
    )
    if result["flagged"]:
        return (
            f"{message}\n❌ {result['failures']} runs failed "
            f"({100 * result['failure_fraction']:.1f}%), above the failure threshold"
        ), EXIT_RUNTIME
    return message, EXIT_OK
