"""
Model functions - train / check / generate / benchmark / oracle entry points

Each function returns a status dictionary instead of raising, so the CLI
tools only have to render it. Errors carry a `kind`:
config (bad input files or arguments), dimension (vector length mismatch)
or runtime (solver, IO or model failures).
"""

import logging
import os
import sys
import time

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from src.core import chain_model, testbench
from src.core.errors import ConfigError, DimensionError, DomainError, ModelFileError, ParetoModelError, TrainingError
from src.functions import eval_functions, learner_functions
from utils import config_utils, file_utils

logger = logging.getLogger(__name__)


def _error(message: str, kind: str) -> dict:
    return {"status": "error", "error": message, "kind": kind}


def train_model(config_path: str) -> dict:
    """Train the configured method and write the model file and trace CSV"""
    try:
        run = config_utils.load_run_config(config_path)
    except ConfigError as e:
        return _error(str(e), "config")

    p = testbench.get_problem(run.problem)
    try:
        paths = file_utils.prepare_output_paths(run.resolved_output_dir)
    except OSError as e:
        return _error(f"Could not create output directory: {e}", "runtime")
    start = time.perf_counter()
    try:
        result = learner_functions.train(p, run.train)
    except TrainingError as e:
        partial = e.partial
        if partial is not None:
            file_utils.write_frame(partial.trace_frame(), paths["trace_file"])
        return _error(f"Training failed: {e}", "runtime")
    except ParetoModelError as e:
        return _error(f"Training failed: {e}", "runtime")

    try:
        chain_model.save(result.model, paths["model_file"])
        file_utils.write_frame(result.trace_frame(), paths["trace_file"])
    except OSError as e:
        return _error(f"Could not write outputs: {e}", "runtime")

    return {
        "status": "success",
        "problem": p.name,
        "method": run.train.method,
        "levels": len(result.model.levels),
        "points_per_level": result.points_per_level(),
        "trace_rows": len(result.trace),
        "eq_tol": result.model.eq_tol,
        "elapsed": time.perf_counter() - start,
        "model_file": str(paths["model_file"]),
        "trace_file": str(paths["trace_file"]),
    }


def check_point(model_path: str, values) -> dict:
    """Run the membership cascade for one metric vector"""
    try:
        model = chain_model.load(model_path)
    except ModelFileError as e:
        return _error(str(e), "config")
    try:
        on_front, level = chain_model.check_membership(model, values)
    except DimensionError as e:
        return _error(str(e), "dimension")
    return {"status": "success", "on_front": on_front, "reject_level": level}


def generate_points(model_path: str, n: int, seed: int, out_csv: str) -> dict:
    """Sample n front points from a model into a CSV"""
    if n < 1:
        return _error(f"n must be at least 1, got {n}", "config")
    try:
        model = chain_model.load(model_path)
    except ModelFileError as e:
        return _error(str(e), "config")
    try:
        points = chain_model.generate(model, n, seed=seed)
        path = file_utils.write_metric_csv(points, out_csv)
    except (ParetoModelError, OSError) as e:
        return _error(f"Generation failed: {e}", "runtime")
    return {"status": "success", "rows": int(points.shape[0]), "path": str(path)}


def benchmark_from_config(config_path: str) -> dict:
    """Run the configured benchmark and write summary, runs and timing CSVs"""
    try:
        run = config_utils.load_run_config(config_path)
    except ConfigError as e:
        return _error(str(e), "config")

    p = testbench.get_problem(run.problem)
    bench = run.eval
    try:
        paths = file_utils.prepare_output_paths(run.resolved_output_dir)
    except OSError as e:
        return _error(f"Could not create output directory: {e}", "runtime")
    try:
        summary = eval_functions.run_benchmark(
            p, bench.methods, bench.n_max_list, bench.repeats,
            n_pf=bench.n_pf, base_seed=bench.base_seed, train_template=run.train,
            workers=bench.workers, failure_threshold=bench.failure_threshold,
        )
    except DomainError as e:
        return _error(str(e), "config")
    except ParetoModelError as e:
        return _error(f"Benchmark failed: {e}", "runtime")

    summary_df = eval_functions.summary_frame(summary)
    try:
        file_utils.write_frame(summary_df, paths["summary_file"])
        file_utils.write_frame(eval_functions.runs_frame(summary.reports), paths["runs_file"])
        file_utils.write_frame(eval_functions.timing_report(summary.reports), paths["timing_file"])
    except OSError as e:
        return _error(f"Could not write outputs: {e}", "runtime")

    return {
        "status": "success",
        "problem": p.name,
        "summary": summary_df,
        "failures": summary.failures,
        "failure_fraction": summary.failure_fraction,
        "flagged": summary.flagged,
        "summary_file": str(paths["summary_file"]),
        "runs_file": str(paths["runs_file"]),
        "timing_file": str(paths["timing_file"]),
    }


def oracle_dump(problem: str, n: int, seed: int, out_csv: str) -> dict:
    """Write true-PF samples with their oracle distances"""
    try:
        p = testbench.get_problem(problem)
    except DomainError as e:
        return _error(str(e), "config")
    if n < 1:
        return _error(f"n must be at least 1, got {n}", "config")
    try:
        path = testbench.export_true_pf_csv(p, n, out_csv, seed=seed)
    except OSError as e:
        return _error(f"Could not write oracle samples: {e}", "runtime")
    return {
        "status": "success",
        "problem": p.name,
        "rows": n,
        "path": str(path),
        "discretization_bound": testbench.discretization_bound(p),
    }
