import dataclasses

import pytest
from pydantic import ValidationError

import config
from src.core import nbi
from src.core.errors import ConfigError
from utils import config_utils, file_utils
from utils.config_utils import BenchmarkSettings, TrainConfig


@pytest.mark.parametrize("n_max,expected", [(2, 1), (3, 2), (4, 3), (10, 5), (30, 15)])
def test_default_initial_budget(n_max, expected):
    assert TrainConfig(n_max=n_max).resolved_n0 == expected


def test_passive_methods_spend_the_whole_budget():
    assert TrainConfig(method="p_pgpr", n_max=7).resolved_n0 == 7
    assert TrainConfig(method="P_PPR", n_max=1).method == "p_ppr"


def test_active_budget_rules():
    with pytest.raises(ValidationError):
        TrainConfig(n_max=1)
    with pytest.raises(ValidationError):
        TrainConfig(n_max=5, n0=5)
    assert TrainConfig(n_max=5, n0=2).resolved_n0 == 2


def test_solver_block_maps_onto_core_settings():
    core = TrainConfig(solver={"n_starts": 3, "tol": 1e-7}).solver.to_core()
    assert isinstance(core, nbi.SolverSettings)
    assert core.n_starts == 3
    assert core.tol == 1e-7
    assert core.penalty_max == nbi.SolverSettings().penalty_max


def test_solver_block_defaults_match_core():
    assert TrainConfig().solver.to_core() == nbi.SolverSettings()
    assert set(config_utils.SolverSettings.model_fields) == {f.name for f in dataclasses.fields(nbi.SolverSettings)}


def test_unknown_method():
    with pytest.raises(ValidationError, match="available"):
        TrainConfig(method="random")
    with pytest.raises(ValidationError):
        BenchmarkSettings(methods=["p_agpr", "nope"])


class TestRunConfig:
    def test_top_level_method_and_seed_flow_into_training(self):
        run = config_utils.parse_run_config({"problem": "sph", "method": "p_ppr", "seed": 4})
        assert run.problem == "SPH"
        assert run.train.method == "p_ppr"
        assert run.train.seed == 4

    def test_train_block_wins(self):
        run = config_utils.parse_run_config({"problem": "SCH", "seed": 4, "train": {"seed": 9}})
        assert run.train.seed == 9

    def test_output_dir_default(self):
        run = config_utils.parse_run_config({"problem": "SCH"})
        assert run.resolved_output_dir == config.DEFAULT_OUTPUT_DIR

    @pytest.mark.parametrize("data", [
        [],
        {"method": "p_agpr"},
        {"problem": "SCH", "train": {"n_max": 0}},
        {"problem": "SCH", "eval": {"repeats": 0}},
        {"problem": "SCH", "surprise": True},
    ])
    def test_invalid_documents(self, data):
        with pytest.raises(ConfigError):
            config_utils.parse_run_config(data)

    def test_load_from_file(self, tmp_path):
        path = file_utils.save_yaml({"problem": "ZDT1", "eval": {"n_max_list": [5, 10]}}, tmp_path / "c.yaml")
        run = config_utils.load_run_config(path)
        assert run.eval.n_max_list == [5, 10]
        assert run.eval.repeats == 50

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            config_utils.load_run_config(tmp_path / "missing.yaml")
        bad = tmp_path / "bad.yaml"
        bad.write_text("problem: [SCH")
        with pytest.raises(ConfigError, match="YAML"):
            config_utils.load_run_config(bad)

    @pytest.mark.parametrize("name", ["sch_train.yaml", "sph_benchmark.yaml", "zdt1_curve.yaml"])
    def test_shipped_configs_validate(self, name):
        run = config_utils.load_run_config(file_utils.resolve_project_path(f"configs/{name}"))
        assert run.problem in ("SCH", "SPH", "ZDT1")
