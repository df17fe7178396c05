"""Run configuration parsing and precedence."""

from __future__ import annotations

import json

import pytest

from ipp.config import (
    DEFAULT_N_PER_ENV,
    REPLICATION_SIZES,
    RunConfig,
    parse_box,
    parse_float_list,
    parse_int_list,
)
from ipp.errors import InputError
from ipp.models.prediction import ScoreName
from ipp.models.results import DEFAULT_LAMBDA_GRID


class TestParsers:
    def test_comma_list(self):
        assert parse_float_list("0, 0.5,2") == (0.0, 0.5, 2.0)

    def test_range_includes_the_stop(self):
        assert parse_float_list("0:15:0.5") == DEFAULT_LAMBDA_GRID
        assert parse_float_list("1:2:0.25") == (1.0, 1.25, 1.5, 1.75, 2.0)

    def test_range_step_must_be_positive(self):
        with pytest.raises(InputError, match="positive"):
            parse_float_list("0:1:0")

    def test_garbage(self):
        with pytest.raises(InputError):
            parse_float_list("a,b")
        with pytest.raises(InputError):
            parse_int_list("1,x")

    def test_box(self):
        assert parse_box("-3,3") == (-3.0, 3.0)
        with pytest.raises(InputError, match="lo,hi"):
            parse_box("1,2,3")


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig(threads=1)
        assert cfg.kind.name is ScoreName.LOGS
        assert cfg.n_per_env == DEFAULT_N_PER_ENV
        assert cfg.sample_sizes == REPLICATION_SIZES
        assert cfg.lambda_grid == DEFAULT_LAMBDA_GRID

    @pytest.mark.parametrize(
        "field,value",
        [
            ("d", 0),
            ("alpha", 1.0),
            ("replications", 1),
            ("threads", 0),
            ("starts", 0),
            ("seed", -1),
            ("n", (1,)),
            ("score", "brier"),
            ("interventions", ("sideways",)),
            ("lambda_grid", (1.0, 0.5)),
            ("box", (2.0, 1.0)),
        ],
    )
    def test_invalid_values(self, field, value):
        with pytest.raises(InputError):
            RunConfig(**{field: value})

    def test_single_sample_size_expected(self):
        with pytest.raises(InputError, match="single sample size"):
            RunConfig(n=(100, 200)).n_per_env

    def test_fit_config(self):
        cfg = RunConfig(score="crps", starts=4, threads=3, lambda_grid=(0.0, 1.0), seed=8)
        fit_cfg = cfg.fit_config(threads=1)
        assert fit_cfg.kind.name is ScoreName.CRPS
        assert fit_cfg.optimizer.n_starts == 4
        assert fit_cfg.optimizer.threads == 1
        assert cfg.fit_config().optimizer.threads == 3
        assert fit_cfg.seed == 8

    def test_to_dict_is_json_ready(self):
        data = RunConfig(threads=1).to_dict()
        json.dumps(data)
        assert isinstance(data["lambda_grid"], list)

    def test_pool_size_is_not_part_of_the_reproducibility_block(self):
        one, many = RunConfig(threads=1), RunConfig(threads=8)
        assert "threads" not in one.reproducibility_dict()
        assert one.reproducibility_dict() == many.reproducibility_dict()
        assert one.to_dict()["threads"] == 1


class TestFromMapping:
    def test_coerces_strings(self):
        cfg = RunConfig.from_mapping({"lambda_grid": "0,1", "n": "100,200", "interventions": "Pooled, correlation"})
        assert cfg.lambda_grid == (0.0, 1.0)
        assert cfg.n == (100, 200)
        assert cfg.interventions == ("pooled", "correlation")

    def test_single_integer_sample_size(self):
        assert RunConfig.from_mapping({"n": 500}).n == (500,)

    def test_unknown_key(self):
        with pytest.raises(InputError, match="Unknown configuration key"):
            RunConfig.from_mapping({"lambda": 3})


class TestResolve:
    def test_flags_beat_file_beat_environment(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"seed": 5, "d": 3, "starts": 2}), encoding="utf-8")
        cfg = RunConfig.resolve({"seed": 9, "d": None}, config, environ={"IPP_SEED": "7"})
        assert cfg.seed == 9
        assert cfg.d == 3
        assert cfg.starts == 2

    def test_file_beats_environment(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"seed": 5}), encoding="utf-8")
        assert RunConfig.resolve({}, config, environ={"IPP_SEED": "7"}).seed == 5

    def test_environment_seed_fallback(self):
        assert RunConfig.resolve({}, None, environ={"IPP_SEED": "7"}).seed == 7
        assert RunConfig.resolve({}, None, environ={}).seed == 0

    def test_bad_environment_seed(self):
        with pytest.raises(InputError, match="IPP_SEED"):
            RunConfig.resolve({}, None, environ={"IPP_SEED": "seven"})

    def test_config_file_must_be_an_object(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(InputError, match="JSON object"):
            RunConfig.resolve({}, config, environ={})

    def test_invalid_json(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("{", encoding="utf-8")
        with pytest.raises(InputError, match="invalid JSON"):
            RunConfig.resolve({}, config, environ={})
