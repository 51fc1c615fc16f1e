"""
Seeded synthetic sales records in the canonical schema.

Each (region, type) series is weekly:
    price = base + trend·t + amplitude·sin(2πt/52 + phase) + noise
with organic priced above conventional, and volumes that fall as price rises.
"""
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .data import COLUMNS, NUMERIC_COLUMNS, SENTINEL, RecordTable
from .errors import ConfigurationError

logger = logging.getLogger("price_radar.synthetic")

REGIONS = [
    "Albany", "Atlanta", "BaltimoreWashington", "Boise", "Boston", "Charlotte", "Chicago",
    "Columbus", "Denver", "Detroit", "Houston", "LosAngeles", "Nashville", "NewYork",
    "Orlando", "Philadelphia", "Portland", "Sacramento", "SanDiego", "Seattle",
]
START_DATE = "2015-01-04"
SEASON_WEEKS = 52


class SyntheticConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    conventional_base: float = 1.10
    organic_base: float = 1.60
    region_spread: float = 0.15
    trend_per_week: float = 0.002
    amplitude: float = 0.18
    noise: float = 0.04
    base_volume: float = 2.0e5
    elasticity: float = 1.5
    organic_volume_share: float = 0.08
    missing_rate: float = Field(0.0, ge=0.0, le=1.0)


def region_names(n: int):
    return [REGIONS[i] if i < len(REGIONS) else f"Region{i:02d}" for i in range(n)]


def gen_synthetic(num_regions: int, weeks: int, seed: int,
                  config: SyntheticConfig = SyntheticConfig()) -> RecordTable:
    if weeks < 2:
        raise ConfigurationError(f"weeks must be >= 2, got {weeks}")
    if num_regions < 1:
        raise ConfigurationError(f"num_regions must be >= 1, got {num_regions}")

    rng = np.random.default_rng(seed)
    dates = pd.date_range(START_DATE, periods=weeks, freq="7D")
    t = np.arange(weeks, dtype=np.float64)
    # weather: bounded index in [0, 100] that follows the season
    weather_base = 50.0 + 30.0 * np.sin(2 * np.pi * t / SEASON_WEEKS - np.pi / 2)

    frames = []
    for region in region_names(num_regions):
        offset = rng.uniform(-config.region_spread, config.region_spread)
        phase = rng.uniform(-0.5, 0.5)
        weather = np.clip(weather_base + rng.normal(0.0, 5.0, weeks), 0.0, 100.0)
        scale = rng.uniform(0.5, 2.0)
        for kind, base in (("conventional", config.conventional_base), ("organic", config.organic_base)):
            price = (base + offset + config.trend_per_week * t
                     + config.amplitude * np.sin(2 * np.pi * t / SEASON_WEEKS + phase)
                     + rng.normal(0.0, config.noise, weeks))
            price = np.maximum(price, 0.05)
            share = 1.0 if kind == "conventional" else config.organic_volume_share
            volume = (config.base_volume * scale * share
                      * np.exp(-config.elasticity * (price - base - offset))
                      * rng.lognormal(0.0, 0.05, weeks))
            mix = rng.dirichlet([6.0, 6.0, 1.0])
            frames.append(pd.DataFrame({
                "Date": dates,
                "AveragePrice": np.round(price, 4),
                "type": kind,
                "year": dates.year.astype(np.int64),
                "Region": region,
                "4046": np.round(volume * mix[0] * 0.8, 2),
                "4225": np.round(volume * mix[1] * 0.8, 2),
                "4770": np.round(volume * mix[2] * 0.8, 2),
                "Salesvolume": np.round(volume, 2),
                "weather": np.round(weather, 3),
            }))

    frame = pd.concat(frames, ignore_index=True)[COLUMNS]
    if config.missing_rate > 0:
        mask = rng.random((len(frame), len(NUMERIC_COLUMNS))) < config.missing_rate
        values = frame[NUMERIC_COLUMNS].to_numpy(dtype=np.float64)
        values[mask] = SENTINEL
        frame[NUMERIC_COLUMNS] = values
    logger.info(f"✅ Generated {len(frame):,} synthetic rows ({num_regions} regions × 2 types × {weeks} weeks)")
    return RecordTable(frame, {c: 0 for c in COLUMNS})
