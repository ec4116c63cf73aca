#!/usr/bin/env python3
"""
Model tools for the Pareto CLI: check, generate, oracle
"""

import os
import sys
from typing import Tuple

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../..')))

from src.functions.model_functions import check_point, generate_points, oracle_dump

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def exit_code_for(result: dict) -> int:
    """Map an error status dict onto the CLI exit codes"""
    if result["status"] == "success":
        return EXIT_OK
    return EXIT_RUNTIME if result.get("kind") == "runtime" else EXIT_USAGE


def check_impl(model_path: str, values) -> Tuple[str, int]:
    """Membership check; stdout gets exactly `on-front` or `rejected level=i`"""
    result = check_point(model_path, values)
    if result["status"] != "success":
        return f"❌ {result['error']}", exit_code_for(result)
    if result["on_front"]:
        return "on-front", EXIT_OK
    return f"rejected level={result['reject_level']}", EXIT_REJECTED


def generate_impl(model_path: str, n: int, seed: int, out_csv: str) -> Tuple[str, int]:
    result = generate_points(model_path, n, seed, out_csv)
    if result["status"] != "success":
        return f"❌ {result['error']}", exit_code_for(result)
    return f"✅ Wrote {result['rows']} points to {result['path']}", EXIT_OK


def oracle_impl(problem: str, n: int, seed: int, out_csv: str) -> Tuple[str, int]:
    result = oracle_dump(problem, n, seed, out_csv)
    if result["status"] != "success":
        return f"❌ {result['error']}", exit_code_for(result)
    return (
        f"✅ Wrote {result['rows']} {result['problem']} true-PF samples to {result['path']} "
        f"(grid spacing {result['discretization_bound']:.3e})"
    ), EXIT_OK
