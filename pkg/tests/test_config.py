"""Tests for run configuration loading."""
import pytest

from src.config import ConfigError, RunConfig, load_config, read_config_file


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert config.command == "sweep"
        assert config.gamma == "0:0.1:11"
        assert config.threads == 1
        assert config.max_weight_value() is None

    def test_codes_from_comma_string(self):
        assert RunConfig(codes="five_qubit, css_seven").codes == ["five_qubit", "css_seven"]

    def test_string_coercion(self):
        config = RunConfig(threads="4", temp_sweep="true", verbose="0", max_weight=3)
        assert config.threads == 4
        assert config.temp_sweep is True
        assert config.verbose is False
        assert config.max_weight_value() == 3

    def test_full_weight(self):
        assert RunConfig(max_weight="full").max_weight_value() == "full"

    @pytest.mark.parametrize("kwargs", [
        {"threads": 0},
        {"estimator": "guess"},
        {"format": "xlsx"},
        {"report": "pdf"},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_output_path(self, tmp_path):
        assert RunConfig(output_dir=str(tmp_path)).output_path("a.csv") == tmp_path / "a.csv"
        assert str(RunConfig(out="x/y.csv").output_path("a.csv")) == "x/y.csv"


class TestConfigFiles:
    def test_key_value_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("codes=five_qubit\nmax-weight=full\neps_rule=prop:0.1\n")
        values = read_config_file(str(path))
        assert values == {"codes": "five_qubit", "max_weight": "full", "eps_rule": "prop:0.1"}

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("codes: [five_qubit, leung_four]\nthreads: 2\n")
        config = load_config(str(path))
        assert config.codes == ["five_qubit", "leung_four"]
        assert config.threads == 2

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("colour: blue\n")
        with pytest.raises(ConfigError, match="colour"):
            read_config_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_config_file(str(tmp_path / "absent.yaml"))

    def test_yaml_must_be_mapping(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text("- a\n- b\n")
        with pytest.raises(ConfigError, match="mapping"):
            read_config_file(str(path))

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("codes: [unterminated\n")
        with pytest.raises(ConfigError, match="Invalid YAML"):
            read_config_file(str(path))


class TestPrecedence:
    def test_flags_beat_file_beat_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GADQEC_THREADS", "3")
        monkeypatch.setenv("GADQEC_OUTPUT_DIR", str(tmp_path / "env_out"))
        path = tmp_path / "run.yaml"
        path.write_text("threads: 5\n")

        assert load_config().threads == 3
        assert load_config(str(path)).threads == 5
        config = load_config(str(path), {"threads": 7, "gamma": None})
        assert config.threads == 7
        assert config.gamma == "0:0.1:11"
        assert config.output_dir == str(tmp_path / "env_out")

    def test_unknown_flags_are_ignored(self):
        assert load_config(None, {"p_grid": "0:1:3"}).command == "sweep"

    def test_invalid_env_value(self, monkeypatch):
        monkeypatch.setenv("GADQEC_THREADS", "many")
        with pytest.raises(ConfigError):
            load_config()
