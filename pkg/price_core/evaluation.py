"""
Test-set evaluation in USD and prediction export.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .config import ModelConfig
from .diffcore import Tensor
from .errors import EmptyDatasetError, PriceRadarError
from .features import FeatureSpec, WindowedSample, stack_samples
from .losses import mse, rmse
from .model import ModelParams, forward

logger = logging.getLogger("price_radar.evaluation")

PREDICTION_COLUMNS = ["date", "region", "type", "actual", "predicted"]

# maps samples to standardized predictions
Predictor = Callable[[Sequence[WindowedSample]], np.ndarray]


@dataclass
class EvaluationResult:
    metrics: Dict[str, Any]
    predictions: pd.DataFrame


def _metric_block(actual: np.ndarray, predicted: np.ndarray) -> Dict[str, Any]:
    return {"mse": mse(actual, predicted), "rmse": rmse(actual, predicted), "n_samples": int(actual.size)}


def evaluate(params: ModelParams, cfg: ModelConfig, test_samples: Sequence[WindowedSample],
             spec: FeatureSpec, predictor: Optional[Predictor] = None,
             with_attention: bool = False) -> EvaluationResult:
    """Predict every test window, undo the standardization and score in USD."""
    if not test_samples:
        raise EmptyDatasetError("❌ no test samples to evaluate")
    alpha = None
    if predictor is not None:
        z = np.asarray(predictor(test_samples), dtype=np.float64)
    else:
        X, _ = stack_samples(test_samples)
        y, weights = forward(Tensor(X), cfg, params, return_attention=True)
        z, alpha = y.data, weights.data

    actual = np.array([s.target_raw for s in test_samples])
    predicted = spec.decode_target(z)
    table = pd.DataFrame({
        "date": pd.to_datetime([s.target_date for s in test_samples]),
        "region": [s.region for s in test_samples],
        "type": [s.type for s in test_samples],
        "actual": actual,
        "predicted": predicted,
    })
    if with_attention and alpha is not None:
        for step in range(alpha.shape[1]):
            table[f"alpha_{step + 1}"] = alpha[:, step]

    metrics = _metric_block(actual, predicted)
    logger.info(f"📊 Test RMSE {metrics['rmse']:.4f} USD, MSE {metrics['mse']:.4f} over {metrics['n_samples']:,} windows")
    return EvaluationResult(metrics, table)


def climatology_baseline(train_samples: Sequence[WindowedSample],
                         test_samples: Sequence[WindowedSample]) -> Dict[str, Any]:
    """Constant predictor equal to the mean training target."""
    if not train_samples or not test_samples:
        raise EmptyDatasetError("❌ baseline needs training and test samples")
    level = float(np.mean([s.target_raw for s in train_samples]))
    actual = np.array([s.target_raw for s in test_samples])
    return _metric_block(actual, np.full_like(actual, level))


def persistence_baseline(test_samples: Sequence[WindowedSample]) -> Dict[str, Any]:
    """Next week's price equals this week's price."""
    if not test_samples:
        raise EmptyDatasetError("❌ baseline needs test samples")
    actual = np.array([s.target_raw for s in test_samples])
    return _metric_block(actual, np.array([s.last_raw for s in test_samples]))


def export_prediction_series(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV sorted by date (then region, type) with actual and predicted columns."""
    path = Path(path)
    if len(table.columns) == 0:
        table = pd.DataFrame(columns=PREDICTION_COLUMNS)
    ordered = table.sort_values(["date", "region", "type"], kind="mergesort")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ordered.to_csv(path, index=False, date_format="%Y-%m-%d", float_format="%.17g")
    except OSError as e:
        raise PriceRadarError(f"❌ cannot write predictions to {path}: {e}") from e
    logger.info(f"✅ Wrote {len(ordered):,} predictions to {path}")
    return path


def read_prediction_series(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, parse_dates=["date"])


def write_metrics(metrics: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(metrics, indent=2, sort_keys=True))
    except OSError as e:
        raise PriceRadarError(f"❌ cannot write metrics to {path}: {e}") from e
    return path
