import pytest
from pydantic import ValidationError

from price_core.config import DataConfig, ModelConfig, RunConfig, TrainConfig, load_run_config
from price_core.errors import ConfigurationError


def test_defaults():
    cfg = load_run_config(environ={})
    assert cfg == RunConfig()
    assert cfg.train.epochs == 100
    assert cfg.train.batch_size == 32
    assert cfg.train.learning_rate == 1e-3
    assert cfg.train.early_stop_patience is None
    assert cfg.model.window_length == 12
    assert cfg.data.ratios == (0.70, 0.15, 0.15)


def test_file_values_and_env_overrides(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text('epochs=5\nlearning_rate=0.01\nhidden_channels=8\nearly_stop_patience=\n# comment\n')
    cfg = load_run_config(path, environ={'PRICE_RADAR_EPOCHS': '7', 'UNRELATED': 'x'})
    assert cfg.train.epochs == 7
    assert cfg.train.learning_rate == 0.01
    assert cfg.model.tcn.hidden_channels == 8
    assert cfg.train.early_stop_patience is None


def test_flat_round_trip():
    cfg = RunConfig(train=TrainConfig(epochs=3, seed=9), data=DataConfig(train_ratio=0.8, val_ratio=0.1,
                                                                         test_ratio=0.1))
    assert RunConfig.from_flat(cfg.flat()) == cfg


def test_unknown_key(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text('epochz=5\n')
    with pytest.raises(ConfigurationError) as err:
        load_run_config(path, environ={})
    assert 'epochz' in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(tmp_path / 'nope.cfg', environ={})


def test_invalid_values():
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ConfigurationError):
        ModelConfig(window_length=40)
