#!/usr/bin/env python3
"""
CLI Tools package for the Pareto CLI
"""

from .model_tools import check_impl, generate_impl, oracle_impl, exit_code_for
from .train_tools import train_impl, benchmark_impl

__all__ = [
    # Model tools
    'check_impl',
    'generate_impl',
    'oracle_impl',
    'exit_code_for',

    # Training tools
    'train_impl',
    'benchmark_impl'
]
