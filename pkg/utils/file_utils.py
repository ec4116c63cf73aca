import os
from pathlib import Path
import sys
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

# Add the project root to the path so we can import modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import config

PathLike = Union[str, Path]


def get_project_root():
    """Return the absolute path to the project root directory."""
    return os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))


def resolve_project_path(relative_path: PathLike) -> Path:
    """
    Return the absolute path to a file shipped with the repo, robust to working directory.
    Absolute paths are returned unchanged.
    """
    path = Path(relative_path)
    if path.is_absolute():
        return path
    return (Path(get_project_root()) / path).resolve()


def prepare_output_paths(output_dir: Optional[PathLike] = None) -> Dict[str, Path]:
    """
    Ensure the output directory exists and return Path objects for every
    artifact a run can write (model, trace, summary, runs, timing).
    """
    base_dir = Path(output_dir or config.DEFAULT_OUTPUT_DIR)
    base_dir.mkdir(parents=True, exist_ok=True)
    return {
        "directory": base_dir.resolve(),
        "model_file": (base_dir / config.MODEL_FILE_NAME).resolve(),
        "trace_file": (base_dir / config.TRACE_FILE_NAME).resolve(),
        "summary_file": (base_dir / config.SUMMARY_FILE_NAME).resolve(),
        "runs_file": (base_dir / config.RUNS_FILE_NAME).resolve(),
        "timing_file": (base_dir / config.TIMING_FILE_NAME).resolve(),
    }


def load_yaml(path: PathLike) -> Any:
    """Load a YAML document; raises FileNotFoundError / yaml.YAMLError to the caller."""
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def save_yaml(data: Any, path: PathLike) -> Path:
    """Write a YAML document and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=None)
    return path


def metric_columns(m: int) -> list:
    return [f"f{i + 1}" for i in range(m)]


def metric_frame(points: np.ndarray, extra: Optional[Dict[str, Sequence]] = None) -> pd.DataFrame:
    """DataFrame with header f1,...,fm (plus optional trailing columns)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    df = pd.DataFrame(points, columns=metric_columns(points.shape[1]))
    for name, column in (extra or {}).items():
        df[name] = list(column)
    return df


def write_metric_csv(points: np.ndarray, path: PathLike,
                     extra: Optional[Dict[str, Sequence]] = None) -> Path:
    """Write metric vectors as CSV with header f1,...,fm."""
    return write_frame(metric_frame(points, extra), path)


def read_metric_csv(path: PathLike) -> np.ndarray:
    """Read back the f1..fm columns of a metric CSV."""
    df = pd.read_csv(path, float_precision="round_trip")
    cols = [c for c in df.columns if c.startswith("f") and c[1:].isdigit()]
    cols.sort(key=lambda c: int(c[1:]))
    return df[cols].to_numpy(dtype=float)


def write_frame(df: pd.DataFrame, path: PathLike) -> Path:
    """Write a DataFrame as CSV; floats keep their shortest round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    return path


def read_frame(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")
