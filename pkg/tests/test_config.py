from pathlib import Path

import pytest
import yaml
from conftest import build_config, build_config_dict

from vortexlab.config import (
    ENV_OUT_DIR,
    ENV_SEED,
    ENV_WORKERS,
    load_config,
    parse_config,
    parse_config_text,
    serialize_config,
    write_config_echo,
)
from vortexlab.errors import ConfigError
from vortexlab.harness import snapshot_times

CONFIG_DIR = Path(__file__).resolve().parents[1] / "data" / "configs"


def _write(tmp_path: Path, data: dict) -> Path:
    path = tmp_path / "experiment.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_defaults_without_file():
    config = load_config(None, env={})
    assert config.mollifier.beta == 0.2
    assert config.grid.M == 256
    assert config.workers == 1


@pytest.mark.parametrize("name", ["default", "acceptance", "exits", "decay"])
def test_shipped_configs_load(name):
    config = load_config(CONFIG_DIR / f"{name}.yaml", env={})
    assert config.grid.M & (config.grid.M - 1) == 0


def test_trend_sweep_runs_to_the_full_horizon():
    config = load_config(CONFIG_DIR / "acceptance.yaml", env={})
    assert config.pde.T == 0.25
    assert config.mollifier.delta == 0.01
    assert config.sweep.Ns == [250, 500, 1000, 2000, 4000]
    assert config.sweep.seeds == 8
    assert snapshot_times(config)[-1] == pytest.approx(0.25)


def test_serialized_config_parses_back(tmp_path):
    config = build_config(str(tmp_path))
    assert parse_config_text(serialize_config(config)) == config


def test_echo_is_written_next_to_results(tmp_path):
    config = build_config(str(tmp_path))
    path = write_config_echo(config, tmp_path / "run")
    assert path.name == "config.yaml"
    assert parse_config_text(path.read_text(encoding="utf-8")) == config


def test_environment_overrides_file(tmp_path):
    path = _write(tmp_path, build_config_dict(str(tmp_path / "file")))
    env = {ENV_SEED: "11", ENV_OUT_DIR: str(tmp_path / "env"), ENV_WORKERS: "3"}
    config = load_config(path, env=env)
    assert config.noise.seed == 11
    assert config.output.directory == str(tmp_path / "env")
    assert config.workers == 3
    # the rest of the section survives the override
    assert config.noise.sigma.matrix == [[1.0, 0.0], [0.0, 1.0]]


def test_flags_override_environment(tmp_path):
    path = _write(tmp_path, build_config_dict(str(tmp_path / "file")))
    env = {ENV_SEED: "11", ENV_WORKERS: "3"}
    config = load_config(path, seed=5, workers=2, out=tmp_path / "flag", env=env)
    assert config.noise.seed == 5
    assert config.workers == 2
    assert config.output.directory == str(tmp_path / "flag")


def test_blank_environment_values_are_ignored(tmp_path):
    path = _write(tmp_path, build_config_dict(str(tmp_path)))
    config = load_config(path, env={ENV_SEED: "  ", ENV_OUT_DIR: ""})
    assert config.noise.seed == 7
    assert config.output.directory == str(tmp_path)


def test_non_integer_environment_seed(tmp_path):
    with pytest.raises(ConfigError, match=ENV_SEED):
        load_config(None, env={ENV_SEED: "seven"})


def test_every_issue_is_listed():
    data = build_config_dict(grid={"M": 100}, pde={"dt": -1.0}, workers=0)
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    detail = info.value.detail
    assert detail.startswith("3 config issue(s)")
    assert "grid.M" in detail and "power of two" in detail
    assert "pde.dt" in detail
    assert "workers" in detail
    assert info.value.exit_code == 2


def test_small_grid_is_rejected():
    with pytest.raises(ConfigError, match="M must be >= 8"):
        parse_config(build_config_dict(grid={"M": 4}))


def test_sweep_needs_increasing_counts():
    with pytest.raises(ConfigError, match="strictly increasing"):
        parse_config(build_config_dict(sweep={"Ns": [100, 50]}))


def test_mixture_needs_components():
    with pytest.raises(ConfigError, match="at least one component"):
        parse_config(build_config_dict(rho0={"kind": "mixture", "components": []}))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot load config"):
        load_config(tmp_path / "absent.yaml", env={})


def test_invalid_yaml_text():
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config_text("grid: [unclosed")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config_text("- 1\n- 2\n")
