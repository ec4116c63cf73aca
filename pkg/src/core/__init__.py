"""
Core module - Pareto primitives, testbenches, regressors, NBI and the chained model
Independent of the CLI layer
"""
