"""
End-to-end orchestration: clean → split by date → fit spec on the training
period → encode → window → train / evaluate.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .checkpoint import Checkpoint
from .config import DataConfig, RunConfig
from .data import SERIES_KEY, RecordTable, clean
from .errors import EmptyDatasetError
from .features import (EncodedSeries, FeatureSpec, WindowedSample, chronological_boundaries, encode,
                       fit_feature_spec, make_windows, split_chronological, window_targets)
from .model import init_params
from .training import TrainReport, train

logger = logging.getLogger("price_radar.pipeline")


@dataclass
class PreparedData:
    table: RecordTable
    spec: FeatureSpec
    series: List[EncodedSeries]
    boundaries: Tuple[np.datetime64, np.datetime64]
    train: List[WindowedSample]
    val: List[WindowedSample]
    test: List[WindowedSample]


def training_rows(table: RecordTable, train_end: np.datetime64) -> RecordTable:
    frame = table.frame
    return RecordTable(frame[frame["Date"] <= train_end].reset_index(drop=True))


def target_dates(table: RecordTable, window_length: int) -> np.ndarray:
    """Dates that can be a window target: every week after a full run of L consecutive weeks."""
    picked = []
    for _, rows in table.frame.groupby(SERIES_KEY, sort=True):
        dates = rows["Date"].sort_values(kind="mergesort").to_numpy()
        picked.append(dates[window_targets(dates, window_length)])
    return np.concatenate(picked) if picked else np.empty(0, dtype="datetime64[ns]")


def prepare_data(table: RecordTable, window_length: int, data_cfg: DataConfig,
                 spec: Optional[FeatureSpec] = None) -> PreparedData:
    """
    Build train/val/test windows. Split dates are cut over the target dates so the
    window shares follow the ratios; the spec is fit on training-period rows unless one is given.
    """
    cleaned = clean(table)
    targets = target_dates(cleaned, window_length)
    if targets.size == 0:
        raise EmptyDatasetError(f"❌ no series has {window_length + 1} consecutive weeks")
    boundaries = chronological_boundaries(targets, data_cfg.ratios)
    if spec is None:
        spec = fit_feature_spec(training_rows(cleaned, boundaries[0]))
    series = encode(cleaned, spec)
    samples = [w for s in series for w in make_windows(s, window_length)]
    train_s, val_s, test_s = split_chronological(samples, data_cfg.ratios, boundaries)
    logger.info(f"📊 Windows: {len(train_s):,} train / {len(val_s):,} val / {len(test_s):,} test "
                f"from {len(series)} series")
    return PreparedData(cleaned, spec, series, boundaries, train_s, val_s, test_s)


def run_training(table: RecordTable, run_cfg: RunConfig) -> Tuple[Checkpoint, TrainReport, PreparedData]:
    data = prepare_data(table, run_cfg.model.window_length, run_cfg.data)
    cfg = run_cfg.model.with_input_channels(data.spec.dimension)
    params = init_params(cfg, run_cfg.train.seed)
    params, report = train(cfg, params, data.train, data.val, run_cfg.train, spec=data.spec)
    report.config = run_cfg.flat()
    ckpt = Checkpoint(cfg, params, data.spec, run_cfg.data,
                      extra={"best_epoch": report.best_epoch, "epochs_run": report.epochs_run})
    return ckpt, report, data
