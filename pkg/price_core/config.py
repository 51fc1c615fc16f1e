"""
Configuration models and loading for PriceRadar.

Hyperparameters live in one place. A run config is a flat key=value text file
(the same format as .env) whose keys are all optional; anything not given keeps
the defaults below. PRICE_RADAR_<KEY> environment variables win over the file.
"""
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigurationError

ENV_PREFIX = "PRICE_RADAR_"
LOGGER_NAME = "price_radar"


class TcnConfig(BaseModel):
    """Residual dilated causal stack. Block i uses dilation dilation_base**i."""
    model_config = ConfigDict(frozen=True)

    input_channels: int = Field(1, ge=1)
    hidden_channels: int = Field(16, ge=1)
    num_blocks: int = Field(3, ge=1)
    kernel_size: int = Field(3, ge=1)
    dilation_base: int = Field(2, ge=1)

    @property
    def receptive_field(self) -> int:
        span = sum(self.dilation_base ** i for i in range(self.num_blocks))
        return 1 + (self.kernel_size - 1) * span

    def dilation(self, block: int) -> int:
        return self.dilation_base ** block


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    window_length: int = Field(12, ge=1)
    tcn: TcnConfig = TcnConfig()
    d_mlp: int = Field(32, ge=1)
    d_h: int = Field(16, ge=1)
    d_a: int = Field(16, ge=1)

    @model_validator(mode="after")
    def _receptive_field_covers_window(self):
        if self.tcn.receptive_field < self.window_length:
            raise ConfigurationError(
                f"receptive field {self.tcn.receptive_field} < window length {self.window_length}; "
                "the model cannot see the whole window"
            )
        return self

    def with_input_channels(self, n: int) -> "ModelConfig":
        return self.model_copy(update={"tcn": self.tcn.model_copy(update={"input_channels": n})})


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(100, ge=1)
    batch_size: int = Field(32, ge=1)
    # 0 is allowed: a frozen run still reports losses
    learning_rate: float = Field(1e-3, ge=0.0)
    adam_beta1: float = Field(0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_epsilon: float = Field(1e-8, gt=0.0)
    huber_delta: float = Field(1.0, gt=0.0)
    seed: int = 42
    early_stop_patience: Optional[int] = Field(None, ge=1)
    progress: bool = True


class DataConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_ratio: float = Field(0.70, gt=0.0, le=1.0)
    val_ratio: float = Field(0.15, ge=0.0, le=1.0)
    test_ratio: float = Field(0.15, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _ratios_sum_to_one(self):
        total = self.train_ratio + self.val_ratio + self.test_ratio
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(f"split ratios must sum to 1, got {total}")
        return self

    @property
    def ratios(self):
        return (self.train_ratio, self.val_ratio, self.test_ratio)


_TCN_KEYS = ("hidden_channels", "num_blocks", "kernel_size", "dilation_base")
_MODEL_KEYS = ("window_length", "d_mlp", "d_h", "d_a")
_TRAIN_KEYS = tuple(TrainConfig.model_fields)
_DATA_KEYS = tuple(DataConfig.model_fields)
KNOWN_KEYS = _TCN_KEYS + _MODEL_KEYS + _TRAIN_KEYS + _DATA_KEYS


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    data: DataConfig = DataConfig()

    def flat(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        out.update({k: getattr(self.model.tcn, k) for k in _TCN_KEYS})
        out.update({k: getattr(self.model, k) for k in _MODEL_KEYS})
        out.update(self.train.model_dump())
        out.update(self.data.model_dump())
        return out

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> "RunConfig":
        unknown = sorted(set(values) - set(KNOWN_KEYS))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        pick = lambda keys: {k: values[k] for k in keys if k in values}
        tcn = TcnConfig(**pick(_TCN_KEYS))
        model = ModelConfig(tcn=tcn, **pick(_MODEL_KEYS))
        return cls(model=model, train=TrainConfig(**pick(_TRAIN_KEYS)), data=DataConfig(**pick(_DATA_KEYS)))


def _clean_value(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = value.strip()
    if value == "" or value.lower() == "none":
        return None
    return value


def load_run_config(path: Union[str, Path, None] = None,
                    environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Resolve defaults + config file + PRICE_RADAR_* overrides into a RunConfig."""
    values: Dict[str, Optional[str]] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        values.update({k.strip().lower(): v for k, v in dotenv_values(path).items()})

    environ = os.environ if environ is None else environ
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            values[key[len(ENV_PREFIX):].lower()] = value

    # empty value means "use the default", except early_stop_patience where it means off
    resolved: Dict[str, Any] = {}
    for key, raw in values.items():
        value = _clean_value(raw)
        if value is not None or key == "early_stop_patience":
            resolved[key] = value
    return RunConfig.from_flat(resolved)


def configure_logging(verbose: bool = False) -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    return logger
