import json

import numpy as np
import pandas as pd
import pytest

from price_core.config import DataConfig, ModelConfig, TcnConfig, TrainConfig
from price_core.errors import DivergenceError
from price_core.model import ModelParams, init_params
from price_core.pipeline import prepare_data
from price_core.synthetic import gen_synthetic
from price_core.training import AdamState, adam_step, dataset_loss, train


def small_config(F, L=4):
    tcn = TcnConfig(input_channels=F, hidden_channels=8, num_blocks=2, kernel_size=2, dilation_base=2)
    return ModelConfig(window_length=L, tcn=tcn, d_mlp=16, d_h=8, d_a=8)


def small_setup(regions=1, weeks=24, seed=0, L=4):
    data = prepare_data(gen_synthetic(regions, weeks, seed), L, DataConfig())
    return data, small_config(data.spec.dimension, L)


def scalar_params(value=1.0):
    return ModelParams.from_arrays({'w': np.array([value])})


def test_adam_zero_gradient_is_a_fixed_point():
    params = scalar_params(0.7)
    tc = TrainConfig()
    new, state = adam_step(params, {'w': np.zeros(1)}, AdamState.zeros(params), tc)
    assert np.array_equal(new['w'].data, params['w'].data)
    assert state.step == 1


@pytest.mark.parametrize('g', [0.5, -3.0, 1e-3])
def test_adam_first_step_is_learning_rate_sized(g):
    params = scalar_params(0.0)
    tc = TrainConfig(learning_rate=0.01)
    new, _ = adam_step(params, {'w': np.array([g])}, AdamState.zeros(params), tc)
    assert new['w'].data[0] == pytest.approx(-0.01 * np.sign(g), rel=1e-4)


def test_adam_moments_stay_finite():
    rng = np.random.default_rng(0)
    params = scalar_params()
    state = AdamState.zeros(params)
    tc = TrainConfig(learning_rate=1e-3)
    for _ in range(10_000):
        params, state = adam_step(params, {'w': rng.uniform(-1, 1, size=1)}, state, tc)
    assert np.isfinite(state.m['w']).all() and np.isfinite(state.v['w']).all()
    assert np.abs(state.m['w']).max() <= 1.0 and state.v['w'].max() <= 1.0


def test_zero_learning_rate_freezes_params():
    data, cfg = small_setup()
    params = init_params(cfg, 1)
    before = params.arrays()
    tc = TrainConfig(epochs=4, batch_size=5, learning_rate=0.0, progress=False)
    trained, report = train(cfg, params, data.train, data.val, tc)
    for name, array in before.items():
        assert np.array_equal(trained[name].data, array)
    assert report.train_loss == pytest.approx([report.train_loss[0]] * 4, rel=1e-12)
    assert report.val_loss == pytest.approx([report.val_loss[0]] * 4, rel=1e-12)


def test_overfits_eight_samples():
    data, cfg = small_setup(regions=1, weeks=24, seed=3)
    samples = data.train[:8]
    assert len(samples) == 8
    params = init_params(cfg, 0)
    assert params.num_weights() > len(samples)
    tc = TrainConfig(epochs=500, batch_size=8, learning_rate=1e-2, progress=False)
    _, report = train(cfg, params, samples, [], tc)
    assert report.val_loss is None
    assert report.best_epoch == 500
    assert report.train_loss[-1] < 1e-2


def test_same_seed_same_run():
    data, cfg = small_setup(regions=2, weeks=30, seed=5)
    tc = TrainConfig(epochs=5, batch_size=8, progress=False)
    p1, r1 = train(cfg, init_params(cfg, 2), data.train, data.val, tc)
    p2, r2 = train(cfg, init_params(cfg, 2), data.train, data.val, tc)
    assert r1.train_loss == r2.train_loss
    assert r1.val_loss == r2.val_loss
    assert r1.best_epoch == r2.best_epoch
    assert r1.metrics == r2.metrics
    for name in p1:
        assert np.array_equal(p1[name].data, p2[name].data)


def test_loss_drops_in_ten_epochs():
    data = prepare_data(gen_synthetic(3, 80, 7), 12, DataConfig())
    cfg = ModelConfig().with_input_channels(data.spec.dimension)
    _, report = train(cfg, init_params(cfg, 42), data.train, data.val, TrainConfig(epochs=10, progress=False))
    assert report.train_loss[9] < report.train_loss[0]


def test_returns_best_validation_epoch():
    data, cfg = small_setup(regions=2, weeks=40, seed=6)
    tc = TrainConfig(epochs=15, batch_size=8, learning_rate=5e-3, progress=False)
    params, report = train(cfg, init_params(cfg, 3), data.train, data.val, tc)
    assert report.val_loss[report.best_epoch - 1] == min(report.val_loss)
    assert dataset_loss(cfg, params, data.val, tc.huber_delta) == min(report.val_loss)


def test_early_stopping():
    data, cfg = small_setup(regions=2, weeks=40, seed=6)
    tc = TrainConfig(epochs=30, batch_size=8, learning_rate=5e-2, early_stop_patience=1, progress=False)
    _, report = train(cfg, init_params(cfg, 3), data.train, data.val, tc)
    assert len(report.val_loss) == report.epochs_run
    assert report.epochs_run == 30 or report.epochs_run - report.best_epoch == 1


def test_divergence_names_epoch_and_batch():
    data, cfg = small_setup()
    tc = TrainConfig(epochs=3, batch_size=4, learning_rate=1e300, progress=False)
    with pytest.raises(DivergenceError) as err:
        train(cfg, init_params(cfg, 0), data.train, data.val, tc)
    assert err.value.epoch >= 1
    assert err.value.batch >= 0
    assert 'epoch' in str(err.value)


def test_report_files(tmp_path):
    data, cfg = small_setup()
    _, report = train(cfg, init_params(cfg, 0), data.train, data.val,
                      TrainConfig(epochs=3, progress=False), spec=data.spec)
    assert report.metrics['units'] == 'USD'

    curve = pd.read_csv(report.write_loss_curve(tmp_path / 'loss_curve.csv'))
    assert list(curve.columns) == ['epoch', 'train_loss', 'val_loss']
    assert curve['epoch'].tolist() == [1, 2, 3]
    assert np.allclose(curve['train_loss'], report.train_loss, rtol=0, atol=1e-15)

    payload = json.loads(report.write_json(tmp_path / 'train_report.json').read_text())
    assert payload['epochs_run'] == 3
    assert payload['best_epoch'] == report.best_epoch
