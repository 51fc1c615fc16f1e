import numpy as np
import pytest

from price_core.diffcore import (ComputationTape, Tensor, backward, causal_dilated_conv1d, matmul, mul, relu,
                                 softmax, sum_all, tanh_op)
from price_core.errors import ContractError, DimensionError, NonFiniteError, ParameterError
from price_core.gradcheck import gradient_check


def conv_oracle(x, kernel, dilation):
    c_out, c_in, K = kernel.shape
    T = x.shape[1]
    out = np.zeros((c_out, T))
    for o in range(c_out):
        for t in range(T):
            for c in range(c_in):
                for j in range(K):
                    s = t - (K - 1 - j) * dilation
                    if s >= 0:
                        out[o, t] += kernel[o, c, j] * x[c, s]
    return out


def test_matmul_identity_and_zero():
    out = matmul(Tensor(np.eye(2)), Tensor([[3, 4], [5, 6]]))
    assert np.array_equal(out.data, [[3, 4], [5, 6]])
    assert np.array_equal(matmul(Tensor([[1, 2]]), Tensor([[0], [0]])).data, [[0]])


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    expected = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    assert np.allclose(matmul(Tensor(a), Tensor(b)).data, expected, rtol=0, atol=1e-12)


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError) as err:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert '[2, 3] vs [2, 3]' in str(err.value)


def test_conv_identity_and_zero_kernel():
    x = np.random.default_rng(1).normal(size=(1, 7))
    assert np.array_equal(causal_dilated_conv1d(Tensor(x), Tensor([[[1.0]]]), 1).data, x)
    zero = causal_dilated_conv1d(Tensor(x), Tensor(np.zeros((2, 1, 3))), 2)
    assert zero.shape == (2, 7)
    assert not zero.data.any()


def test_conv_matches_direct_sum():
    rng = np.random.default_rng(2)
    x, kernel = rng.normal(size=(3, 10)), rng.normal(size=(2, 3, 3))
    for d in (1, 2, 4):
        out = causal_dilated_conv1d(Tensor(x), Tensor(kernel), d)
        assert np.allclose(out.data, conv_oracle(x, kernel, d), rtol=0, atol=1e-12)


def test_conv_is_causal():
    rng = np.random.default_rng(3)
    x, kernel = rng.normal(size=(2, 12)), Tensor(rng.normal(size=(2, 2, 3)))
    base = causal_dilated_conv1d(Tensor(x), kernel, 2).data
    for t0 in range(12):
        bumped = x.copy()
        bumped[:, t0] += 10.0
        out = causal_dilated_conv1d(Tensor(bumped), kernel, 2).data
        assert np.array_equal(out[:, :t0], base[:, :t0])


def test_conv_rejects_non_positive_dilation():
    with pytest.raises(ParameterError):
        causal_dilated_conv1d(Tensor(np.ones((1, 4))), Tensor(np.ones((1, 1, 2))), 0)


def test_conv_batch_matches_single_windows():
    rng = np.random.default_rng(4)
    X, kernel = rng.normal(size=(5, 3, 8)), Tensor(rng.normal(size=(4, 3, 2)))
    batched = causal_dilated_conv1d(Tensor(X), kernel, 2).data
    for b in range(5):
        assert np.allclose(batched[b], causal_dilated_conv1d(Tensor(X[b]), kernel, 2).data, rtol=0, atol=1e-12)


def test_relu_and_softmax_examples():
    assert np.array_equal(relu(Tensor([-1, 0, 2])).data, [0, 0, 2])
    assert np.allclose(softmax(Tensor([0, 0, 0])).data, [1 / 3] * 3, rtol=0, atol=1e-15)
    direct = np.exp([1.0, 2.0, 3.0]) / np.exp([1.0, 2.0, 3.0]).sum()
    assert np.allclose(softmax(Tensor([1, 2, 3])).data, direct, rtol=0, atol=1e-12)


def test_softmax_is_stable_for_large_inputs():
    p = softmax(Tensor([1000.0, 999.0, -1000.0])).data
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) < 1e-9


def test_backward_examples():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    tape = ComputationTape()
    with tape:
        loss = sum_all(x)
    backward(loss, tape)
    assert np.array_equal(x.grad, np.ones((2, 3)))

    x = Tensor(3.0, requires_grad=True)
    tape = ComputationTape()
    with tape:
        loss = mul(x, x)
    backward(loss, tape)
    assert x.grad == pytest.approx(6.0)


def test_backward_sums_repeated_uses():
    x = Tensor([1.0, -2.0], requires_grad=True)
    tape = ComputationTape()
    with tape:
        loss = sum_all(x * x + x * 3.0 + tanh_op(x))
    backward(loss, tape)
    expected = 2 * x.data + 3.0 + (1 - np.tanh(x.data) ** 2)
    assert np.allclose(x.grad, expected, rtol=0, atol=1e-12)


def test_backward_rejects_non_scalar_loss():
    x = Tensor([1.0, 2.0], requires_grad=True)
    tape = ComputationTape()
    with tape:
        y = mul(x, x)
    with pytest.raises(ContractError):
        backward(y, tape)


def test_nothing_recorded_without_tape():
    x = Tensor([1.0, 2.0], requires_grad=True)
    tape = ComputationTape()
    y = sum_all(x)
    assert len(tape) == 0
    with pytest.raises(ContractError):
        backward(y, ComputationTape())


def test_tensor_rejects_non_finite_values():
    with pytest.raises(NonFiniteError):
        Tensor([1.0, np.nan])


def test_composition_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    weights = Tensor(rng.normal(size=(2, 6)))

    def loss_fn(t):
        h = relu(causal_dilated_conv1d(t['x'], t['k'], 2))
        return sum_all(mul(tanh_op(matmul(t['W'], h)), weights))

    results = gradient_check('composition', loss_fn, {
        'x': rng.normal(size=(3, 6)), 'k': rng.normal(size=(4, 3, 2)), 'W': rng.normal(size=(2, 4)),
    })
    assert all(r.passed for r in results), [(r.tensor, r.max_rel_err) for r in results if not r.passed]
