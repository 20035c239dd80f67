"""
Integration tests: end-to-end CLI runs and their reproducibility
"""
import json

import pytest

from backend.app.cli import main
from tests.conftest import fixture_path


def _run(command, out_dir, *extra):
    argv = [command, "--model", str(fixture_path("canonical")), "--mu", "0.9,0.1", "--nu", "0.2,0.8",
            "--samples", "3000", "--seed", "17", "--out", str(out_dir), *extra]
    assert main(argv) == 0
    return {path.name: path.read_bytes() for path in sorted(out_dir.iterdir())}


@pytest.mark.integration
@pytest.mark.slow
class TestReproducibility:
    """Test that identical seeds give byte-identical outputs"""

    def test_stability_runs(self, tmp_path):
        first = _run("stability", tmp_path / "a", "--horizon", "25", "--grid", "20")
        second = _run("stability", tmp_path / "b", "--horizon", "25", "--grid", "20")
        assert set(first) == {"stability.csv", "stability.json"}
        assert first == second

    def test_robustness_runs(self, tmp_path):
        first = _run("robustness", tmp_path / "a", "--grid", "20")
        second = _run("robustness", tmp_path / "b", "--grid", "20")
        assert set(first) == {"robustness.json", "decomposition.csv"}
        assert first == second

    def test_seed_changes_output(self, tmp_path):
        first = _run("stability", tmp_path / "a", "--horizon", "10", "--policy", "uniform_random")
        second = _run("stability", tmp_path / "b", "--horizon", "10", "--policy", "uniform_random",
                      "--seed", "18")
        assert first["stability.csv"] != second["stability.csv"]


@pytest.mark.integration
class TestConfigFileRuns:
    """Test experiments driven by a YAML config file"""

    def test_yaml_config(self, tmp_path):
        config = tmp_path / "experiment.yaml"
        config.write_text(
            f"model_path: {fixture_path('three_state')}\n"
            "mu: [0.6, 0.3, 0.1]\n"
            "nu: [0.2, 0.3, 0.5]\n"
            "method: enumerate\n"
            "horizon: 5\n"
            "policy_source:\n"
            "  kind: uniform_random\n"
            "  seed: 4\n"
            f"output_dir: {tmp_path / 'out'}\n"
        )
        assert main(["stability", "--config", str(config)]) == 0
        payload = json.loads((tmp_path / "out" / "stability.json").read_text())
        assert payload["method"] == "enumerate"
        assert payload["alpha"] == pytest.approx(0.85)
        assert len(payload["rows"]) == 6
        assert all(r["within_alpha"] for r in payload["per_step_ratios"])
