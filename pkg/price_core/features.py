"""
Feature encoding, supervised windows and chronological splitting.

Numeric columns are z-scored with population statistics of the training rows;
type and Region are one-hot encoded with the training vocabulary. Each
(Region, type) series becomes its own stream of windows, so no window ever
spans two series.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from sklearn.preprocessing import OneHotEncoder, StandardScaler

from .data import NUMERIC_COLUMNS, SERIES_KEY, RecordTable
from .diffcore import Tensor
from .errors import ConfigurationError, EmptyDatasetError, SchemaError, SpecError

logger = logging.getLogger("price_radar.features")

TARGET_COLUMN = "AveragePrice"
CATEGORICAL_COLUMNS = ["type", "Region"]
WEEK = np.timedelta64(7, "D")


class FeatureSpec(BaseModel):
    """Frozen encoding fitted on the training rows."""
    model_config = ConfigDict(frozen=True)

    numeric_columns: List[str]
    means: List[float]
    stds: List[float]
    categorical_columns: List[str]
    vocabularies: Dict[str, List[str]]
    target_column: str = TARGET_COLUMN

    @property
    def feature_names(self) -> List[str]:
        names = list(self.numeric_columns)
        for col in self.categorical_columns:
            names += [f"{col}={v}" for v in self.vocabularies[col]]
        return names

    @property
    def dimension(self) -> int:
        return len(self.numeric_columns) + sum(len(self.vocabularies[c]) for c in self.categorical_columns)

    def _stats(self, column: str) -> Tuple[float, float]:
        i = self.numeric_columns.index(column)
        return self.means[i], self.stds[i]

    def encode_numeric(self, column: str, values) -> np.ndarray:
        m, s = self._stats(column)
        return (np.asarray(values, dtype=np.float64) - m) / s

    def decode_numeric(self, column: str, z) -> np.ndarray:
        m, s = self._stats(column)
        return np.asarray(z, dtype=np.float64) * s + m

    def encode_target(self, price) -> np.ndarray:
        return self.encode_numeric(self.target_column, price)

    def decode_target(self, z) -> np.ndarray:
        return self.decode_numeric(self.target_column, z)


def fit_feature_spec(train_rows: RecordTable,
                     numeric_columns: Sequence[str] = NUMERIC_COLUMNS,
                     categorical_columns: Sequence[str] = CATEGORICAL_COLUMNS) -> FeatureSpec:
    frame = train_rows.frame
    if frame.empty:
        raise EmptyDatasetError("❌ cannot fit a feature spec on zero training rows")
    for col in list(numeric_columns) + list(categorical_columns):
        if col not in frame.columns:
            raise SchemaError(f"unknown column {col!r}", column=col)
    if TARGET_COLUMN not in numeric_columns:
        raise SchemaError(f"{TARGET_COLUMN} must be one of the numeric features", column=TARGET_COLUMN)
    for col in numeric_columns:
        if frame[col].nunique(dropna=True) < 2:
            raise SpecError(col)

    scaler = StandardScaler().fit(frame[list(numeric_columns)].to_numpy(dtype=np.float64))
    encoder = OneHotEncoder(handle_unknown="ignore").fit(frame[list(categorical_columns)].astype(str))
    vocab = {col: [str(v) for v in cats] for col, cats in zip(categorical_columns, encoder.categories_)}

    spec = FeatureSpec(
        numeric_columns=list(numeric_columns),
        means=[float(v) for v in scaler.mean_],
        stds=[float(v) for v in scaler.scale_],
        categorical_columns=list(categorical_columns),
        vocabularies=vocab,
    )
    logger.info(f"✅ Feature spec fitted on {len(frame):,} training rows: F={spec.dimension}")
    return spec


def encode_frame(frame: pd.DataFrame, spec: FeatureSpec) -> np.ndarray:
    """Rows → [N×F] feature matrix; unseen categories encode as all zeros."""
    numeric = (frame[spec.numeric_columns].to_numpy(dtype=np.float64) - np.asarray(spec.means)) / np.asarray(spec.stds)
    blocks = [numeric]
    for col in spec.categorical_columns:
        vocab = spec.vocabularies[col]
        values = frame[col].astype(str)
        unseen = sorted(set(values) - set(vocab))
        if unseen:
            logger.warning(f"⚠️ {col}: unseen categories {unseen} encoded as all-zeros")
        dummies = pd.get_dummies(pd.Categorical(values, categories=vocab), dtype=np.float64)
        blocks.append(dummies.to_numpy(dtype=np.float64).reshape(len(frame), len(vocab)))
    return np.hstack(blocks)


@dataclass
class EncodedSeries:
    region: str
    type: str
    dates: np.ndarray
    features: np.ndarray   # [T×F]
    target: np.ndarray     # standardized price, [T]
    target_raw: np.ndarray  # USD, [T]

    def __len__(self) -> int:
        return len(self.dates)


def encode(table: RecordTable, spec: FeatureSpec) -> List[EncodedSeries]:
    """One EncodedSeries per (Region, type), each sorted by date."""
    out = []
    for (region, kind), rows in table.frame.groupby(SERIES_KEY, sort=True):
        rows = rows.sort_values("Date", kind="mergesort")
        features = encode_frame(rows, spec)
        price = rows[spec.target_column].to_numpy(dtype=np.float64)
        out.append(EncodedSeries(
            region=str(region), type=str(kind), dates=rows["Date"].to_numpy(),
            features=features, target=spec.encode_target(price), target_raw=price,
        ))
    return out


@dataclass
class WindowedSample:
    window: Tensor          # [F×L], oldest step first
    target: float           # standardized price right after the window
    target_raw: float       # same, in USD
    target_date: np.datetime64
    region: str
    type: str
    last_raw: float         # USD price of the final window step


def window_targets(dates: Sequence, L: int) -> np.ndarray:
    """Indices t >= L whose L history steps and target step are consecutive weeks."""
    dates = np.asarray(dates, dtype="datetime64[ns]")
    if len(dates) < L + 1:
        return np.empty(0, dtype=np.int64)
    runs = np.concatenate([[0], np.cumsum(np.diff(dates) != WEEK)])
    t = np.arange(L, len(dates))
    return t[runs[t] == runs[t - L]]


def make_windows(series: EncodedSeries, L: int) -> List[WindowedSample]:
    """
    One sample per position with L history weeks and one target week.
    A gap-free series of T weeks gives T - L samples; windows that would
    straddle a missing week are skipped.
    """
    if L < 1:
        raise ConfigurationError(f"window length must be >= 1, got {L}")
    T = len(series)
    if T < L + 1:
        logger.warning(f"⚠️ Skipping series {series.region}/{series.type}: {T} weeks < {L + 1}")
        return []
    if T > 1 and not np.all(np.diff(series.dates) > np.timedelta64(0, "D")):
        raise ConfigurationError(f"series {series.region}/{series.type} is not strictly time-ordered")

    targets = window_targets(series.dates, L)
    if len(targets) < T - L:
        logger.warning(f"⚠️ {series.region}/{series.type}: skipped {T - L - len(targets)} windows across missing weeks")

    samples = []
    for t in targets:
        s = t - L
        samples.append(WindowedSample(
            window=Tensor(series.features[s:t].T),
            target=float(series.target[t]),
            target_raw=float(series.target_raw[t]),
            target_date=series.dates[t],
            region=series.region,
            type=series.type,
            last_raw=float(series.target_raw[t - 1]),
        ))
    return samples


def _check_ratios(ratios: Sequence[float]) -> Tuple[float, float, float]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9 or ratios[0] <= 0:
        raise ConfigurationError(f"split ratios must be three non-negative numbers summing to 1, got {list(ratios)}")
    return tuple(float(r) for r in ratios)


def chronological_boundaries(dates: Sequence, ratios: Sequence[float]) -> Tuple[np.datetime64, np.datetime64]:
    """(train_end, val_end) over the sorted unique dates: earliest dates train, latest test."""
    train, val, _ = _check_ratios(ratios)
    unique = np.unique(np.asarray(dates, dtype="datetime64[ns]"))
    if unique.size == 0:
        raise EmptyDatasetError("❌ no dates to split")
    n = unique.size
    k_train = min(max(1, int(round(n * train))), n)
    k_val = min(max(k_train, int(round(n * (train + val)))), n)
    return unique[k_train - 1], unique[k_val - 1]


def split_chronological(samples: Sequence[WindowedSample], ratios: Sequence[float],
                        boundaries: Optional[Tuple[np.datetime64, np.datetime64]] = None):
    """Partition samples by target date: train ≤ train_end < val ≤ val_end < test."""
    _check_ratios(ratios)
    if not samples:
        return [], [], []
    if boundaries is None:
        boundaries = chronological_boundaries([s.target_date for s in samples], ratios)
    train_end, val_end = (np.datetime64(b, "ns") for b in boundaries)

    ordered = sorted(samples, key=lambda s: (np.datetime64(s.target_date, "ns"), s.region, s.type))
    train, val, test = [], [], []
    for s in ordered:
        d = np.datetime64(s.target_date, "ns")
        (train if d <= train_end else val if d <= val_end else test).append(s)
    return train, val, test


def stack_samples(samples: Sequence[WindowedSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Batch arrays: windows [B×F×L] and standardized targets [B]."""
    X = np.stack([s.window.data for s in samples])
    y = np.array([s.target for s in samples], dtype=np.float64)
    return X, y
