"""
Mini-batch Adam training with the Huber objective.

Each epoch shuffles the training windows with a seeded permutation, takes one
Adam step per batch and records the mean train loss and the full validation
loss. The returned parameters come from the epoch with the lowest validation
loss (the last epoch when there is no validation set).
"""
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np
import pandas as pd
from tqdm import tqdm

from .config import ModelConfig, TrainConfig
from .diffcore import ComputationTape, Tensor, backward
from .errors import DivergenceError, EmptyDatasetError, NonFiniteError
from .features import FeatureSpec, WindowedSample, stack_samples
from .losses import huber_loss, huber_values, mse, rmse
from .model import ModelParams, forward, predict

logger = logging.getLogger("price_radar.training")

__all__ = ["TrainConfig", "AdamState", "TrainReport", "adam_step", "train", "dataset_loss"]

REPORT_SCHEMA = {
    "type": "object",
    "required": ["train_loss", "val_loss", "best_epoch", "epochs_run", "metrics", "wall_time_s"],
    "properties": {
        "train_loss": {"type": "array", "items": {"type": "number"}},
        "val_loss": {"type": ["array", "null"], "items": {"type": "number"}},
        "best_epoch": {"type": "integer", "minimum": 1},
        "epochs_run": {"type": "integer", "minimum": 1},
        "metrics": {"type": "object", "required": ["mse", "rmse", "n_samples"]},
        "wall_time_s": {"type": "number", "minimum": 0},
        "config": {"type": "object"},
    },
}


@dataclass
class AdamState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, params: ModelParams) -> "AdamState":
        return cls({k: np.zeros(t.shape) for k, t in params.items()},
                   {k: np.zeros(t.shape) for k, t in params.items()}, 0)


def adam_step(params: ModelParams, grads: Dict[str, np.ndarray], state: AdamState,
              tc: TrainConfig) -> Tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    t = state.step + 1
    b1, b2 = tc.adam_beta1, tc.adam_beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t

    new_arrays, new_m, new_v = {}, {}, {}
    for name, tensor in params.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * (g * g)
        new_arrays[name] = tensor.data - tc.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + tc.adam_epsilon)
        new_m[name], new_v[name] = m, v
    return ModelParams.from_arrays(new_arrays), AdamState(new_m, new_v, t)


@dataclass
class TrainReport:
    train_loss: List[float]
    val_loss: Optional[List[float]]
    best_epoch: int
    metrics: Dict[str, Any]
    wall_time_s: float
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["epochs_run"] = self.epochs_run
        return out

    def loss_curve(self) -> pd.DataFrame:
        val = self.val_loss if self.val_loss is not None else [np.nan] * self.epochs_run
        return pd.DataFrame({"epoch": np.arange(1, self.epochs_run + 1),
                             "train_loss": self.train_loss, "val_loss": val})

    def write_loss_curve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.loss_curve().to_csv(path, index=False, float_format="%.17g")
        return path

    def write_json(self, path: Union[str, Path]) -> Path:
        payload = self.to_dict()
        jsonschema.validate(payload, REPORT_SCHEMA)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True))
        return path


def dataset_loss(cfg: ModelConfig, params: ModelParams, samples: Sequence[WindowedSample], delta: float) -> float:
    X, y = stack_samples(samples)
    return float(huber_values(y - predict(X, cfg, params), delta).mean())


def _metrics(cfg, params, samples, spec: Optional[FeatureSpec], split: str) -> Dict[str, Any]:
    X, y = stack_samples(samples)
    z = predict(X, cfg, params)
    if spec is not None:
        actual = np.array([s.target_raw for s in samples])
        predicted = spec.decode_target(z)
        units = "USD"
    else:
        actual, predicted, units = y, z, "standardized"
    return {"split": split, "units": units, "n_samples": len(samples),
            "mse": mse(actual, predicted), "rmse": rmse(actual, predicted)}


def train(cfg: ModelConfig, params: ModelParams, train_samples: Sequence[WindowedSample],
          val_samples: Sequence[WindowedSample], tc: TrainConfig,
          spec: Optional[FeatureSpec] = None) -> Tuple[ModelParams, TrainReport]:
    if not train_samples:
        raise EmptyDatasetError("❌ no training samples")
    params.check(cfg)
    started = time.perf_counter()

    X_train, y_train = stack_samples(train_samples)
    n = len(train_samples)
    rng = np.random.default_rng(tc.seed)
    state = AdamState.zeros(params)
    has_val = len(val_samples) > 0

    train_curve: List[float] = []
    val_curve: List[float] = []
    best_params, best_epoch, best_val = params, 1, np.inf
    stale = 0

    logger.info(f"🚀 Training on {n:,} windows ({len(val_samples):,} validation), "
                f"{params.num_weights():,} weights, {tc.epochs} epochs")
    epochs = tqdm(range(1, tc.epochs + 1), desc="train", unit="epoch", disable=not tc.progress)
    for epoch in epochs:
        order = rng.permutation(n)
        total = 0.0
        for batch, start in enumerate(range(0, n, tc.batch_size)):
            idx = order[start:start + tc.batch_size]
            params.zero_grad()
            tape = ComputationTape()
            try:
                with tape:
                    preds = forward(Tensor(X_train[idx]), cfg, params)
                    loss = huber_loss(Tensor(y_train[idx]), preds, tc.huber_delta)
                backward(loss, tape)
                grads = params.grads()
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise NonFiniteError("non-finite gradient")
            except NonFiniteError as e:
                raise DivergenceError(epoch, batch, str(e)) from e
            total += loss.item() * len(idx)
            params, state = adam_step(params, grads, state, tc)

        train_curve.append(total / n)
        line = f"epoch {epoch}: train_loss={train_curve[-1]:.6f}"
        if has_val:
            val_curve.append(dataset_loss(cfg, params, val_samples, tc.huber_delta))
            line += f" val_loss={val_curve[-1]:.6f}"
            if val_curve[-1] < best_val:
                best_val, best_params, best_epoch, stale = val_curve[-1], params, epoch, 0
            else:
                stale += 1
            epochs.set_postfix(train=f"{train_curve[-1]:.4f}", val=f"{val_curve[-1]:.4f}")
        else:
            best_params, best_epoch = params, epoch
            epochs.set_postfix(train=f"{train_curve[-1]:.4f}")
        logger.debug(line)

        if has_val and tc.early_stop_patience is not None and stale >= tc.early_stop_patience:
            logger.info(f"⏹️ Early stop at epoch {epoch}: no validation improvement for {stale} epochs")
            break

    best_params.zero_grad()
    metrics = _metrics(cfg, best_params, val_samples if has_val else train_samples, spec,
                       "val" if has_val else "train")
    report = TrainReport(
        train_loss=train_curve,
        val_loss=val_curve if has_val else None,
        best_epoch=best_epoch,
        metrics=metrics,
        wall_time_s=time.perf_counter() - started,
        config={"train": tc.model_dump(), "model": cfg.model_dump()},
    )
    logger.info(f"✅ Training done: best epoch {best_epoch}, "
                f"{metrics['split']} RMSE {metrics['rmse']:.4f} {metrics['units']}")
    return best_params, report
