import math
import os
import sys
from typing import List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# Add the project root to the path so we can import modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import config
from src.core import nbi
from src.core.errors import ConfigError
from utils import file_utils


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


_CORE_SOLVER = nbi.SolverSettings()


class SolverSettings(_Block):
    """Inner NBI solver knobs, shared by all methods of one run; defaults come from the core dataclass"""

    tol: float = Field(_CORE_SOLVER.tol, gt=0)
    accept_tol: float = Field(_CORE_SOLVER.accept_tol, gt=0)
    n_starts: int = Field(_CORE_SOLVER.n_starts, ge=1)
    anchor_starts: int = Field(_CORE_SOLVER.anchor_starts, ge=1)
    max_outer: int = Field(_CORE_SOLVER.max_outer, ge=1)
    inner_maxiter: int = Field(_CORE_SOLVER.inner_maxiter, ge=1)
    penalty_init: float = Field(_CORE_SOLVER.penalty_init, gt=0)
    penalty_max: float = Field(_CORE_SOLVER.penalty_max, gt=0)
    penalty_growth: float = Field(_CORE_SOLVER.penalty_growth, gt=1)
    stall_iters: int = Field(_CORE_SOLVER.stall_iters, ge=1)
    neg_tol: float = Field(_CORE_SOLVER.neg_tol, le=0)

    def to_core(self) -> nbi.SolverSettings:
        return nbi.SolverSettings(**self.model_dump())


class GprSettings(_Block):
    theta1: float = Field(1.0, gt=0)
    theta2: Optional[float] = Field(None, gt=0)
    jitter_init_factor: float = Field(1e-10, gt=0)
    jitter_max_factor: float = Field(1e-4, gt=0)


class QuerySettings(_Block):
    candidates: int = Field(2000, ge=1)
    refine_steps: int = Field(50, ge=0)
    retries: int = Field(5, ge=1)


class ChainSettings(_Block):
    eq_tol: Optional[float] = Field(None, gt=0)
    generation_retries: int = Field(20, ge=0)


class TrainConfig(_Block):
    """One training run: method, sample budget, seed and the tuning blocks"""

    method: str = "p_agpr"
    n_max: int = Field(10, ge=1)
    n0: Optional[int] = Field(None, ge=1)
    seed: int = 0
    solver: SolverSettings = Field(default_factory=SolverSettings)
    gpr: GprSettings = Field(default_factory=GprSettings)
    query: QuerySettings = Field(default_factory=QuerySettings)
    chain: ChainSettings = Field(default_factory=ChainSettings)

    @field_validator("method")
    @classmethod
    def _known_method(cls, value: str) -> str:
        value = value.lower()
        if value not in config.METHODS:
            raise ValueError(f"unknown method '{value}'; available: {', '.join(config.METHODS)}")
        return value

    @model_validator(mode="after")
    def _budget(self) -> "TrainConfig":
        if self.is_active:
            if self.n_max < 2:
                raise ValueError("active training needs n_max >= 2")
            if self.n0 is not None and self.n0 >= self.n_max:
                raise ValueError(f"n0 ({self.n0}) must be smaller than n_max ({self.n_max})")
        return self

    @property
    def is_active(self) -> bool:
        return self.method == "p_agpr"

    @property
    def resolved_n0(self) -> int:
        """Initial samples per level; passive methods spend the whole budget up front."""
        if not self.is_active:
            return self.n_max
        if self.n0 is not None:
            return self.n0
        return min(max(3, math.ceil(self.n_max / 2)), self.n_max - 1)


class BenchmarkSettings(_Block):
    methods: List[str] = Field(default_factory=lambda: list(config.METHODS))
    n_max_list: List[int] = Field(default_factory=lambda: [5, 10, 15, 20, 25, 30])
    repeats: int = Field(50, ge=1)
    n_pf: Optional[int] = Field(None, ge=1)
    base_seed: int = 0
    workers: int = Field(1, ge=1)
    failure_threshold: float = Field(0.01, ge=0, le=1)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, values: List[str]) -> List[str]:
        values = [v.lower() for v in values]
        unknown = [v for v in values if v not in config.METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; available: {', '.join(config.METHODS)}")
        if not values:
            raise ValueError("at least one method is required")
        return values

    @field_validator("n_max_list")
    @classmethod
    def _positive_budgets(cls, values: List[int]) -> List[int]:
        if not values or any(v < 1 for v in values):
            raise ValueError("n_max_list must be a non-empty list of positive integers")
        return values


class RunConfig(_Block):
    """Top-level run document; `train.method` and `train.seed` default to the top-level values"""

    problem: str
    method: str = "p_agpr"
    seed: int = 0
    output_dir: Optional[str] = None
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: BenchmarkSettings = Field(default_factory=BenchmarkSettings)

    @model_validator(mode="before")
    @classmethod
    def _inherit_train_defaults(cls, data):
        if isinstance(data, dict):
            train = dict(data.get("train") or {})
            train.setdefault("method", data.get("method", "p_agpr"))
            train.setdefault("seed", data.get("seed", 0))
            data = {**data, "train": train}
        return data

    @field_validator("problem")
    @classmethod
    def _known_problem(cls, value: str) -> str:
        from src.core.testbench import problem_names

        names = problem_names()
        if value.upper() not in names:
            raise ValueError(f"unknown problem '{value}'; available: {', '.join(names)}")
        return value.upper()

    @property
    def resolved_output_dir(self) -> str:
        return self.output_dir or config.DEFAULT_OUTPUT_DIR


def _format_validation_error(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        location = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{location}: {err['msg']}")
    return "; ".join(parts)


def parse_run_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run config must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {_format_validation_error(e)}") from e


def load_run_config(path) -> RunConfig:
    """Load and validate a YAML run config; every failure surfaces as ConfigError."""
    if not path or not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        data = file_utils.load_yaml(path)
    except yaml.YAMLError as e:
        raise ConfigError(f"config file is not valid YAML: {e}") from e
    return parse_run_config(data)
