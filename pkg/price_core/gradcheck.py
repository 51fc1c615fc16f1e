"""
Central finite-difference checks of reverse-mode gradients.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping

import numpy as np

from .config import ModelConfig, TcnConfig
from .diffcore import ComputationTape, Tensor, backward, causal_dilated_conv1d, mul, softmax, sum_all, tanh_op
from .losses import huber_loss
from .model import ModelParams, attention_pool, forward, init_params

logger = logging.getLogger("price_radar.gradcheck")

EPS = 1e-5
RTOL = 1e-4
ATOL = 1e-8

LossFn = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass
class GradcheckResult:
    case: str
    tensor: str
    max_abs_err: float
    max_rel_err: float
    passed: bool


def gradient_check(case: str, loss_fn: LossFn, arrays: Mapping[str, np.ndarray],
                   eps: float = EPS, rtol: float = RTOL, atol: float = ATOL) -> List[GradcheckResult]:
    """Compare tape gradients of loss_fn against central differences, one result per tensor."""
    tracked = {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}
    tape = ComputationTape()
    with tape:
        loss = loss_fn(tracked)
    backward(loss, tape)

    plain = {k: Tensor(v) for k, v in arrays.items()}
    results = []
    for name, base in arrays.items():
        base = np.asarray(base, dtype=np.float64)
        analytic = tracked[name].grad if tracked[name].grad is not None else np.zeros(base.shape)
        numeric = np.zeros(base.shape)
        for i in np.ndindex(base.shape):
            bumped = base.copy()
            bumped[i] = base[i] + eps
            f_plus = loss_fn({**plain, name: Tensor(bumped)}).item()
            bumped[i] = base[i] - eps
            f_minus = loss_fn({**plain, name: Tensor(bumped)}).item()
            numeric[i] = (f_plus - f_minus) / (2 * eps)

        abs_err = np.abs(analytic - numeric)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        rel_err = np.where(scale > 0, abs_err / np.where(scale > 0, scale, 1.0), 0.0)
        passed = bool(np.all(abs_err <= rtol * scale + atol))
        results.append(GradcheckResult(case, name, float(abs_err.max(initial=0.0)),
                                       float(rel_err.max(initial=0.0)), passed))
    return results


def tiny_model_config() -> ModelConfig:
    """F=2, L=4, one TCN block, d_mlp=3, d_h=2."""
    tcn = TcnConfig(input_channels=2, hidden_channels=3, num_blocks=1, kernel_size=4, dilation_base=2)
    return ModelConfig(window_length=4, tcn=tcn, d_mlp=3, d_h=2, d_a=2)


def model_case(seed: int, batch: int = 3, delta: float = 1.0):
    """Huber loss of the full model on a seeded batch, as (loss_fn, arrays)."""
    cfg = tiny_model_config()
    rng = np.random.default_rng(seed)
    arrays = init_params(cfg, seed).arrays()
    # non-zero biases so every term contributes to the check
    for name, value in arrays.items():
        if name.endswith((".bias", ".b1", ".b2", ".b")):
            arrays[name] = rng.normal(0.0, 0.3, value.shape)
    X = Tensor(rng.normal(size=(batch, cfg.tcn.input_channels, cfg.window_length)))
    y = Tensor(rng.normal(0.0, 2.0, size=batch))

    def loss_fn(tensors):
        return huber_loss(y, forward(X, cfg, ModelParams(tensors)), delta)

    return loss_fn, arrays


def run_gradcheck_suite(seed: int = 0) -> List[GradcheckResult]:
    rng = np.random.default_rng(seed)
    results: List[GradcheckResult] = []

    loss_fn, arrays = model_case(seed)
    results += gradient_check("model", loss_fn, arrays)

    weights = Tensor(rng.normal(size=(3, 9)))
    results += gradient_check(
        "causal_dilated_conv1d",
        lambda t: sum_all(mul(causal_dilated_conv1d(t["x"], t["kernel"], 2), weights)),
        {"x": rng.normal(size=(2, 9)), "kernel": rng.normal(size=(3, 2, 3))},
    )

    probe = Tensor(rng.normal(size=5))
    results += gradient_check(
        "softmax",
        lambda t: sum_all(mul(softmax(tanh_op(t["x"])), probe)),
        {"x": rng.normal(size=5)},
    )

    def attention_loss(t):
        params = ModelParams({"attn.W": t["W"], "attn.b": t["b"], "attn.v": t["v"]})
        context, _ = attention_pool(t["H"], params)
        return sum_all(mul(context, Tensor([0.7, -1.3])))

    results += gradient_check("attention_pool", attention_loss, {
        "H": rng.normal(size=(2, 6)), "W": rng.normal(size=(3, 2)),
        "b": rng.normal(size=3), "v": rng.normal(size=3),
    })

    # residuals on both sides of the quadratic/linear switch and exactly on it
    y = Tensor(np.zeros(6))
    results += gradient_check(
        "huber_loss",
        lambda t: huber_loss(y, t["y_hat"], 1.0),
        {"y_hat": np.array([0.3, -0.999, 1.001, -2.5, 1.0, 0.0])},
        atol=1e-6,
    )

    for r in results:
        level = logging.DEBUG if r.passed else logging.ERROR
        logger.log(level, f"{'✅' if r.passed else '❌'} {r.case}/{r.tensor}: "
                          f"max abs err {r.max_abs_err:.3e}, max rel err {r.max_rel_err:.3e}")
    return results
