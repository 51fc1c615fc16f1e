"""
Huber training loss and the MSE/RMSE evaluation metrics.
"""
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .diffcore import Tensor, record_op
from .errors import ContractError, DimensionError

ArrayLike = Union[np.ndarray, list, tuple]


class HuberDelta(BaseModel):
    """Quadratic-to-linear switch point, in target units."""
    model_config = ConfigDict(frozen=True)

    delta: float = Field(1.0, gt=0.0)


def _as_delta(delta: Union[HuberDelta, float]) -> float:
    return delta.delta if isinstance(delta, HuberDelta) else HuberDelta(delta=delta).delta


def huber_values(residuals: np.ndarray, delta: float) -> np.ndarray:
    """Per-sample Huber value of residuals r."""
    a = np.abs(residuals)
    return np.where(a <= delta, 0.5 * residuals * residuals, delta * (a - 0.5 * delta))


def huber_loss(y: Tensor, y_hat: Tensor, delta: Union[HuberDelta, float] = 1.0) -> Tensor:
    """Mean Huber loss over samples; differentiable in both y and y_hat."""
    d = _as_delta(delta)
    if y.shape != y_hat.shape:
        raise DimensionError("huber_loss", y.shape, y_hat.shape)
    n = y.size
    if n == 0:
        raise ContractError("huber_loss needs at least one sample")

    r = y.data - y_hat.data
    value = np.asarray(huber_values(r, d).sum() / n)
    # derivative of the per-sample value w.r.t. r: r inside the band, δ·sign(r) outside
    dr = np.clip(r, -d, d) / n
    return record_op("huber_loss", value, (y, y_hat), lambda g: (g * dr, -g * dr))


def _residuals(y: ArrayLike, y_hat: ArrayLike) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise DimensionError("metric", y.shape, y_hat.shape)
    if y.size == 0:
        raise ContractError("metrics need at least one sample")
    return y - y_hat


def mse(y: ArrayLike, y_hat: ArrayLike) -> float:
    r = _residuals(y, y_hat)
    return float(np.mean(r * r))


def rmse(y: ArrayLike, y_hat: ArrayLike) -> float:
    return float(np.sqrt(mse(y, y_hat)))
