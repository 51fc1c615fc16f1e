"""
TCN → per-step MLP → attention pooling → affine head.

    y = out_W · Attention(MLP(TCN(x))) + out_b

x is one window [F×L] (or a batch [B×F×L]) of standardized weekly features;
y is the standardized next-week price.
"""
import logging
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from .config import ModelConfig, TcnConfig
from .diffcore import (Tensor, add, add_bias, causal_dilated_conv1d, matmul, relu,
                       reshape, softmax, tanh_op, transpose)
from .errors import ConfigurationError, ContractError, DimensionError, EmptySequenceError

logger = logging.getLogger("price_radar.model")

__all__ = [
    "TcnConfig", "ModelConfig", "ModelParams", "expected_shapes", "init_params",
    "tcn_forward", "mlp_forward", "attention_pool", "forward", "predict",
]


def expected_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Parameter name -> shape, in creation order."""
    tcn = cfg.tcn
    shapes: Dict[str, Tuple[int, ...]] = {}
    c_in = tcn.input_channels
    for i in range(tcn.num_blocks):
        c_out = tcn.hidden_channels
        shapes[f"tcn.{i}.kernel"] = (c_out, c_in, tcn.kernel_size)
        shapes[f"tcn.{i}.bias"] = (c_out,)
        if c_in != c_out:
            shapes[f"tcn.{i}.proj"] = (c_out, c_in, 1)
        c_in = c_out
    shapes["mlp.W1"] = (cfg.d_mlp, tcn.hidden_channels)
    shapes["mlp.b1"] = (cfg.d_mlp,)
    shapes["mlp.W2"] = (cfg.d_h, cfg.d_mlp)
    shapes["mlp.b2"] = (cfg.d_h,)
    shapes["attn.W"] = (cfg.d_a, cfg.d_h)
    shapes["attn.b"] = (cfg.d_a,)
    shapes["attn.v"] = (cfg.d_a,)
    shapes["out.W"] = (1, cfg.d_h)
    shapes["out.b"] = (1,)
    return shapes


class ModelParams:
    """Named learnable tensors of the whole model."""

    def __init__(self, tensors: Mapping[str, Tensor]):
        self._tensors: Dict[str, Tensor] = dict(tensors)

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], requires_grad: bool = True) -> "ModelParams":
        return cls({k: Tensor(v, requires_grad=requires_grad, name=k) for k, v in arrays.items()})

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._tensors.items()}

    def grads(self) -> Dict[str, np.ndarray]:
        return {k: (t.grad if t.grad is not None else np.zeros(t.shape)) for k, t in self._tensors.items()}

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.zero_grad()

    def num_weights(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def check(self, cfg: ModelConfig) -> "ModelParams":
        expected = expected_shapes(cfg)
        if set(expected) != set(self._tensors):
            missing = sorted(set(expected) - set(self._tensors))
            extra = sorted(set(self._tensors) - set(expected))
            raise ContractError(f"parameter set mismatch (missing={missing}, unexpected={extra})")
        for name, shape in expected.items():
            if self._tensors[name].shape != shape:
                raise DimensionError(name, self._tensors[name].shape, shape)
        return self


def _glorot_limit(name: str, shape: Tuple[int, ...]) -> float:
    if len(shape) == 3:
        fan_in, fan_out = shape[1] * shape[2], shape[0] * shape[2]
    elif len(shape) == 2:
        fan_out, fan_in = shape
    else:
        # attention context vector v, read as a [1×d_a] row
        fan_in, fan_out = shape[0], 1
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(cfg: ModelConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases; fully determined by `seed`."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in expected_shapes(cfg).items():
        if name.endswith((".bias", ".b1", ".b2", ".b")):
            arrays[name] = np.zeros(shape)
        else:
            limit = _glorot_limit(name, shape)
            arrays[name] = rng.uniform(-limit, limit, size=shape)
    params = ModelParams.from_arrays(arrays)
    logger.debug(f"initialized {params.num_weights():,} weights with seed {seed}")
    return params


def tcn_forward(x: Tensor, cfg: TcnConfig, params: ModelParams) -> Tensor:
    """Residual dilated causal stack: [..., F, L] -> [..., C, L]."""
    if x.data.ndim < 2 or x.shape[-2] != cfg.input_channels:
        raise DimensionError("tcn_forward", x.shape, (cfg.input_channels, "L"))
    L = x.shape[-1]
    if L < 1:
        raise EmptySequenceError("tcn_forward: window has no time steps")
    if cfg.receptive_field < L:
        raise ConfigurationError(
            f"receptive field {cfg.receptive_field} < window length {L}; the model cannot see the whole window"
        )

    h = x
    for i in range(cfg.num_blocks):
        conv = causal_dilated_conv1d(h, params[f"tcn.{i}.kernel"], cfg.dilation(i))
        act = relu(add_bias(conv, params[f"tcn.{i}.bias"]))
        proj = f"tcn.{i}.proj"
        residual = causal_dilated_conv1d(h, params[proj], 1) if proj in params else h
        h = add(act, residual)
    return h


def mlp_forward(h: Tensor, params: ModelParams) -> Tensor:
    """W2·ReLU(W1·h + b1) + b2 for a vector h [C], or columnwise over [..., C, L]."""
    W1 = params["mlp.W1"]
    vector = h.data.ndim == 1
    rows = h.shape[0] if vector else (h.shape[-2] if h.data.ndim >= 2 else None)
    if rows != W1.shape[1]:
        raise DimensionError("mlp_forward", h.shape, W1.shape)
    H = reshape(h, (h.shape[0], 1)) if vector else h
    hidden = relu(add_bias(matmul(W1, H), params["mlp.b1"]))
    out = add_bias(matmul(params["mlp.W2"], hidden), params["mlp.b2"])
    return reshape(out, (out.shape[0],)) if vector else out


def attention_pool(H: Tensor, params: ModelParams) -> Tuple[Tensor, Tensor]:
    """
    score_t = vᵀ·tanh(W·h_t + b), alpha = softmax(score), c = Σ_t alpha_t·h_t.
    H [..., d_h, L] -> (c [..., d_h], alpha [..., L]).
    """
    if H.data.ndim < 2:
        raise DimensionError("attention_pool", H.shape)
    if H.shape[-1] == 0:
        raise EmptySequenceError("attention_pool: empty sequence")
    W, b, v = params["attn.W"], params["attn.b"], params["attn.v"]
    if H.shape[-2] != W.shape[1]:
        raise DimensionError("attention_pool", H.shape, W.shape)

    batch = H.shape[:-2]
    d_h, L = H.shape[-2], H.shape[-1]
    keys = tanh_op(add_bias(matmul(W, H), b))
    scores = matmul(reshape(v, (1, v.shape[0])), keys)
    alpha = softmax(scores)
    context = matmul(H, transpose(alpha))
    return reshape(context, batch + (d_h,)), reshape(alpha, batch + (L,))


def forward(x: Tensor, cfg: ModelConfig, params: ModelParams,
            return_attention: bool = False) -> Union[Tensor, Tuple[Tensor, Tensor]]:
    """Prediction for one window (scalar tensor) or a batch ([B] tensor)."""
    H = mlp_forward(tcn_forward(x, cfg.tcn, params), params)
    context, alpha = attention_pool(H, params)
    batch = context.shape[:-1]
    column = reshape(context, batch + (cfg.d_h, 1))
    y = add_bias(matmul(params["out.W"], column), params["out.b"])
    y = reshape(y, batch)
    return (y, alpha) if return_attention else y


def predict(windows: np.ndarray, cfg: ModelConfig, params: ModelParams) -> np.ndarray:
    """Inference on raw arrays [F×L] or [B×F×L]; nothing is recorded."""
    return np.asarray(forward(Tensor(windows), cfg, params).data, dtype=np.float64)
