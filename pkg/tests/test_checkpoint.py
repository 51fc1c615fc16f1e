import zipfile

import numpy as np
import pytest

from price_core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from price_core.config import DataConfig, ModelConfig
from price_core.errors import CheckpointError
from price_core.features import fit_feature_spec
from price_core.model import init_params, predict
from price_core.synthetic import gen_synthetic
from price_core.data import clean


def make_checkpoint(seed=0):
    spec = fit_feature_spec(clean(gen_synthetic(2, 20, seed=seed)))
    cfg = ModelConfig().with_input_channels(spec.dimension)
    return Checkpoint(cfg, init_params(cfg, seed), spec, DataConfig(), extra={'best_epoch': 3})


def test_round_trip_is_bit_exact(tmp_path):
    ckpt = make_checkpoint()
    loaded = load_checkpoint(save_checkpoint(tmp_path / 'model.ckpt', ckpt))
    assert loaded.model_config == ckpt.model_config
    assert loaded.feature_spec == ckpt.feature_spec
    assert loaded.data_config == ckpt.data_config
    assert loaded.extra == {'best_epoch': 3}
    assert list(loaded.params) == list(ckpt.params)
    for name in ckpt.params:
        assert np.array_equal(loaded.params[name].data, ckpt.params[name].data)

    X = np.random.default_rng(0).normal(size=(5, ckpt.feature_spec.dimension, 12))
    assert np.array_equal(predict(X, loaded.model_config, loaded.params),
                          predict(X, ckpt.model_config, ckpt.params))


def test_same_checkpoint_same_bytes(tmp_path):
    a = save_checkpoint(tmp_path / 'a.ckpt', make_checkpoint(1))
    b = save_checkpoint(tmp_path / 'b.ckpt', make_checkpoint(1))
    assert a.read_bytes() == b.read_bytes()


def test_members_are_plain_npy(tmp_path):
    path = save_checkpoint(tmp_path / 'model.ckpt', make_checkpoint())
    with np.load(path) as archive:
        assert 'meta' in archive.files
        assert archive['meta'].shape == ()
        assert archive['param/mlp.W1'].shape == (32, 16)


def test_malformed_checkpoint(tmp_path):
    bad = tmp_path / 'bad.ckpt'
    bad.write_text('not a zip')
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)

    empty = tmp_path / 'empty.ckpt'
    with zipfile.ZipFile(empty, 'w'):
        pass
    with pytest.raises(CheckpointError):
        load_checkpoint(empty)

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / 'missing.ckpt')


def test_meta_with_wrong_shape_rejected(tmp_path):
    path = save_checkpoint(tmp_path / 'model.ckpt', make_checkpoint())
    with np.load(path) as archive:
        members = {name: archive[name] for name in archive.files}
    members['meta'] = members['meta'].reshape(1)
    bad = tmp_path / 'promoted.npz'
    np.savez(bad, **members)
    with pytest.raises(CheckpointError, match='0-d'):
        load_checkpoint(bad)
