import numpy as np
import pytest

from src.core import gpr, testbench
from src.core.chain_model import ChainedPfModel
from src.core.nbi import SolverSettings, build_f_matrix
from utils.config_utils import TrainConfig

FAST_SOLVER = {"n_starts": 4, "anchor_starts": 4}
FAST_QUERY = {"candidates": 400, "refine_steps": 20}


def fast_train_config(**overrides) -> TrainConfig:
    data = {"method": "p_agpr", "n_max": 8, "n0": 4, "seed": 3, "solver": FAST_SOLVER, "query": FAST_QUERY}
    data.update(overrides)
    return TrainConfig.model_validate(data)


def fit_level(inputs, targets, theta2=None):
    inputs = np.asarray(inputs, dtype=float).reshape(len(targets), -1)
    hyper = gpr.GprHyperParams(theta1=1.0, theta2=theta2 or gpr.median_heuristic_theta2(inputs))
    return gpr.fit(inputs, targets, hyper)


@pytest.fixture(scope="session")
def sch():
    return testbench.get_problem("SCH")


@pytest.fixture(scope="session")
def zdt1():
    return testbench.get_problem("ZDT1")


@pytest.fixture(scope="session")
def sph():
    return testbench.get_problem("SPH")


@pytest.fixture(scope="session")
def maf3():
    return testbench.get_problem("MAF3")


@pytest.fixture
def fast_solver():
    return SolverSettings(n_starts=4, anchor_starts=4)


@pytest.fixture
def train_config():
    return fast_train_config()


@pytest.fixture(scope="session")
def sch_analytic_model():
    """Two-metric model fitted straight to the analytic SCH front"""
    f1 = np.linspace(0.0, 4.0, 15)
    f2 = (np.sqrt(f1) - 2.0) ** 2
    F = build_f_matrix([0.0, 0.0], [4.0, 4.0])
    return ChainedPfModel(
        l1=0.0, levels=(fit_level(f1, f2),), f_min=F.f_min, f_max=F.f_max, F=F,
        eq_tol=1e-3, problem_name="SCH", method="p_pgpr",
    )


@pytest.fixture(scope="session")
def zdt1_analytic_model():
    f1 = np.linspace(0.0, 1.0, 25)
    F = build_f_matrix([0.0, 0.0], [1.0, 1.0])
    return ChainedPfModel(
        l1=0.0, levels=(fit_level(f1, 1.0 - np.sqrt(f1)),), f_min=F.f_min, f_max=F.f_max, F=F,
        eq_tol=5e-3, problem_name="ZDT1", method="p_pgpr",
    )


@pytest.fixture(scope="session")
def sph_analytic_model(sph):
    """Three-metric model: arc data for level 2, sphere samples for level 3"""
    f1 = np.linspace(-1.0, 0.0, 15)
    arc = -np.sqrt(np.clip(1.0 - f1 ** 2, 0.0, None))
    shell = testbench.true_pf_sample(sph, 200, seed=11)
    F = build_f_matrix([-1.0, -1.0, -1.0], [0.0, 0.0, 0.0])
    return ChainedPfModel(
        l1=-1.0,
        levels=(fit_level(f1, arc), fit_level(shell[:, :2], shell[:, 2])),
        f_min=F.f_min, f_max=F.f_max, F=F,
        eq_tol=0.02, problem_name="SPH", method="p_pgpr",
    )
