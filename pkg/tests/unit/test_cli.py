"""
Unit tests for the command-line front end
"""
import json
from pathlib import Path

import pytest
import yaml

from backend.app.cli import ConfigError, build_config, build_parser, main
from backend.app.models.schemas import Criterion, EstimationMethod, PolicyKind

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "fixtures" / "models"


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def _parse(*argv):
    return build_parser().parse_args(list(argv))


@pytest.mark.unit
@pytest.mark.fast
class TestValidateCommand:
    """Test suite for `validate`"""

    def test_valid_model(self, capsys):
        assert main(["validate", "--model", str(fixture_path("canonical"))]) == 0
        assert "OK (2 states, 2 observations, 2 actions)" in capsys.readouterr().out

    def test_broken_model(self, capsys):
        assert main(["validate", "--model", str(fixture_path("broken_row_sum"))]) == 1
        out = capsys.readouterr().out
        assert "violation" in out
        assert "transition" in out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["validate", "--model", str(tmp_path / "absent.json")]) == 2
        assert "cannot read model file" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  \"discount\": 0.9,\n  oops\n}\n")
        assert main(["validate", "--model", str(path)]) == 2


@pytest.mark.unit
@pytest.mark.fast
class TestAnalyzeCommand:
    """Test suite for `analyze`"""

    def _report(self, name, capsys):
        assert main(["analyze", "--model", str(fixture_path(name)), "--format", "json"]) == 0
        return json.loads(capsys.readouterr().out)

    def test_canonical(self, capsys):
        report = self._report("canonical", capsys)
        assert report["contraction"]["alpha"] == pytest.approx(0.85, abs=1e-12)
        assert report["contraction"]["exponentially_stable"] is True
        assert report["observability"]["rank_Q"] == 2

    def test_uniform_mixing(self, capsys):
        assert self._report("uniform_mixing", capsys)["contraction"]["alpha"] == pytest.approx(0.0, abs=1e-12)

    def test_frozen_chain(self, capsys):
        report = self._report("frozen", capsys)
        assert report["contraction"]["alpha"] == pytest.approx(1.0)
        assert report["contraction"]["exponentially_stable"] is False
        assert report["observability"]["observable"] is False

    def test_text_format(self, capsys):
        assert main(["analyze", "--model", str(fixture_path("canonical"))]) == 0
        out = capsys.readouterr().out
        assert "alpha" in out
        assert "exponentially stable = yes" in out

    def test_broken_model_fails(self, capsys):
        assert main(["analyze", "--model", str(fixture_path("broken_row_sum"))]) == 1
        assert "row" in capsys.readouterr().err


@pytest.mark.unit
@pytest.mark.fast
class TestBuildConfig:
    """Test suite for layering config files and flags"""

    def test_flags_only(self, tmp_path):
        args = _parse("stability", "--model", str(fixture_path("canonical")), "--mu", "0.5,0.5",
                      "--nu", "0.2,0.8", "--policy", "fixed_action", "--action", "1",
                      "--horizon", "10", "--samples", "500", "--out", str(tmp_path))
        config = build_config(args)
        assert config.mu == (0.5, 0.5)
        assert config.nu == (0.2, 0.8)
        assert config.policy_source.kind == PolicyKind.FIXED_ACTION
        assert config.policy_source.action == 1
        assert config.horizon == 10
        assert config.samples == 500

    def test_yaml_file_with_flag_override(self, tmp_path):
        config_file = tmp_path / "experiment.yaml"
        config_file.write_text(yaml.safe_dump({
            "model_path": str(fixture_path("three_state")),
            "mu": [0.2, 0.3, 0.5],
            "nu": [1 / 3, 1 / 3, 1 / 3],
            "method": "enumerate",
            "horizon": 4,
            "policy_source": {"kind": "uniform_random", "seed": 9},
        }))
        args = _parse("robustness", "--config", str(config_file), "--horizon", "6", "--criterion", "average")
        config = build_config(args)

        assert config.method == EstimationMethod.ENUMERATE
        assert config.horizon == 6
        assert config.criterion == Criterion.AVERAGE
        assert config.policy_source.kind == PolicyKind.UNIFORM_RANDOM
        assert config.policy_source.seed == 9

    def test_json_config_file(self, tmp_path):
        config_file = tmp_path / "experiment.json"
        config_file.write_text(json.dumps({"model_path": str(fixture_path("canonical")),
                                           "mu": "0.9,0.1", "nu": "0.5,0.5"}))
        config = build_config(_parse("stability", "--config", str(config_file)))
        assert config.mu == (0.9, 0.1)
        assert config.policy_source.kind == PolicyKind.SOLVE

    def test_missing_model_path(self):
        with pytest.raises(ConfigError, match="model_path"):
            build_config(_parse("stability", "--mu", "0.5,0.5", "--nu", "0.5,0.5"))

    def test_config_must_be_mapping(self, tmp_path):
        config_file = tmp_path / "list.yaml"
        config_file.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            build_config(_parse("stability", "--config", str(config_file)))

    def test_bad_belief_string(self):
        with pytest.raises(ConfigError):
            build_config(_parse("stability", "--model", str(fixture_path("canonical")),
                                "--mu", "a,b", "--nu", "0.5,0.5"))

    def test_belief_must_sum_to_one(self):
        with pytest.raises(ConfigError, match="mu: .*sums to"):
            build_config(_parse("stability", "--model", str(fixture_path("canonical")),
                                "--mu", "0.5,0.6", "--nu", "0.5,0.5"))


@pytest.mark.unit
class TestExperimentCommands:
    """Test suite for `stability` and `robustness` exit codes and outputs"""

    def test_stability_writes_outputs(self, tmp_path, capsys):
        code = main(["stability", "--model", str(fixture_path("canonical")), "--mu", "0.5,0.5",
                     "--nu", "0.1,0.9", "--policy", "fixed_action", "--horizon", "5",
                     "--method", "enumerate", "--out", str(tmp_path)])
        assert code == 0
        assert "certified" in capsys.readouterr().out

        lines = (tmp_path / "stability.csv").read_text().splitlines()
        assert lines[0] == "n,E_tv,E_tv_se,envelope_2alpha_n,relative_entropy,pinsker_rhs"
        assert len(lines) == 7
        payload = json.loads((tmp_path / "stability.json").read_text())
        assert payload["alpha"] == pytest.approx(0.85)
        assert payload["method"] == "enumerate"

    def test_absolute_continuity_exit_code(self, tmp_path, capsys):
        code = main(["stability", "--model", str(fixture_path("canonical")), "--mu", "0.5,0.5",
                     "--nu", "1,0", "--policy", "fixed_action", "--horizon", "3", "--out", str(tmp_path)])
        assert code == 1
        assert "absolutely continuous" in capsys.readouterr().err
        assert not (tmp_path / "stability.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        assert main(["stability", "--config", str(tmp_path / "missing.yaml")]) == 2

    def test_prior_not_summing_to_one_exit_code(self, tmp_path, capsys):
        code = main(["stability", "--model", str(fixture_path("canonical")), "--mu", "0.5,0.6",
                     "--nu", "0.5,0.5", "--policy", "fixed_action", "--horizon", "3", "--out", str(tmp_path)])
        assert code == 2
        assert "sums to" in capsys.readouterr().err

    @pytest.mark.parametrize("command", ["stability", "robustness"])
    def test_prior_length_mismatch_exit_code(self, command, tmp_path, capsys):
        code = main([command, "--model", str(fixture_path("canonical")), "--mu", "0.3,0.3,0.4",
                     "--nu", "0.2,0.3,0.5", "--horizon", "3", "--out", str(tmp_path)])
        assert code == 2
        assert "model has 2 states" in capsys.readouterr().err
        assert not any(tmp_path.iterdir())

    def test_robustness_writes_report(self, tmp_path, capsys):
        code = main(["robustness", "--model", str(fixture_path("canonical")), "--mu", "0.99,0.01",
                     "--nu", "0.01,0.99", "--grid", "10", "--horizon", "40", "--samples", "400",
                     "--out", str(tmp_path)])
        assert code == 0
        assert "measured gap" in capsys.readouterr().out

        report = json.loads((tmp_path / "robustness.json").read_text())
        assert report["criterion"] == "discounted"
        assert report["grid_resolution"] == 10
        assert report["prior_independent"] is not None
        header = (tmp_path / "decomposition.csv").read_text().splitlines()[0]
        assert header.startswith("n,transient,transient_se,strategic")
