import numpy as np
import pytest

from price_core.data import COLUMNS, NUMERIC_COLUMNS, SENTINEL, clean
from price_core.errors import ConfigurationError
from price_core.synthetic import SyntheticConfig, gen_synthetic


def test_same_seed_same_table():
    a, b = gen_synthetic(3, 50, seed=11), gen_synthetic(3, 50, seed=11)
    assert a.frame.equals(b.frame)
    assert not a.frame.equals(gen_synthetic(3, 50, seed=12).frame)


def test_schema_and_shape():
    table = gen_synthetic(4, 30, seed=1)
    assert list(table.frame.columns) == COLUMNS
    assert len(table) == 4 * 2 * 30
    assert set(table.frame['type']) == {'conventional', 'organic'}
    assert (table.frame['year'] == table.frame['Date'].dt.year).all()
    assert (table.frame['AveragePrice'] > 0).all()


def test_organic_priced_above_conventional():
    for seed in range(5):
        frame = gen_synthetic(3, 52, seed=seed).frame
        means = frame.groupby('type')['AveragePrice'].mean()
        assert means['organic'] > means['conventional']


def test_fitted_trend_matches_configuration():
    config = SyntheticConfig()
    frame = gen_synthetic(1, 260, seed=3, config=config).frame
    series = frame[frame['type'] == 'conventional']
    slope = np.polyfit(np.arange(len(series), dtype=np.float64), series['AveragePrice'].to_numpy(), 1)[0]
    assert slope > 0
    assert abs(slope - config.trend_per_week) < 1e-3


def test_missing_rate_injects_sentinels():
    table = gen_synthetic(2, 40, seed=4, config=SyntheticConfig(missing_rate=0.05))
    assert (table.frame[NUMERIC_COLUMNS] == SENTINEL).any().any()
    cleaned = clean(table)
    assert 0 < cleaned.report.dropped['sentinel'] < len(table)


def test_rejects_degenerate_sizes():
    with pytest.raises(ConfigurationError):
        gen_synthetic(2, 1, seed=0)
    with pytest.raises(ConfigurationError):
        gen_synthetic(0, 10, seed=0)
