# Configuration file for the Pareto-front modeling toolkit
import os

from dotenv import load_dotenv

load_dotenv()

PROBLEM_REGISTRY_FILE = "utils/registry/problems.yaml"
DEFAULT_OUTPUT_DIR = os.getenv("PFM_OUTPUT_DIR", "output")
LOG_LEVEL = os.getenv("PFM_LOG_LEVEL", "INFO")

MODEL_FILE_NAME = "model.pf"
TRACE_FILE_NAME = "trace.csv"
SUMMARY_FILE_NAME = "summary.csv"
RUNS_FILE_NAME = "runs.csv"
TIMING_FILE_NAME = "timing.csv"

MODEL_FORMAT = "pareto-chain-model"
MODEL_FORMAT_VERSION = 1

# metric-space quantization applied before dedup / set operations
DEDUP_GRID = 1e-12

METHODS = ("p_agpr", "p_pgpr", "p_ppr")
