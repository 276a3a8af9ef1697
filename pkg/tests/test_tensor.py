import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddigraph import tensor as T
from ddigraph.errors import AllMasked, NonFiniteError, ShapeMismatch
from ddigraph.tensor import AdamState, Parameter, adam_step, backward, constant, grad_check, gradients, xavier_init


def test_masked_softmax_examples():
    out = T.masked_softmax(constant([5.0, 5.0]), [1, 0]).value
    assert out.tolist() == [1.0, 0.0]
    np.testing.assert_allclose(T.masked_softmax(constant([0.0, 0.0, 0.0]), [1, 1, 1]).value, [1 / 3] * 3, atol=1e-15)
    e = math.e
    np.testing.assert_allclose(
        T.masked_softmax(constant([1.0, 2.0]), [1, 1]).value, [1 / (1 + e), e / (1 + e)], atol=1e-15
    )


def test_masked_softmax_ignores_huge_masked_logits():
    out = T.masked_softmax(constant([0.0, 1e300, 0.0]), [1, 0, 1]).value
    assert out.tolist() == [0.5, 0.0, 0.5]


def test_masked_softmax_all_masked():
    with pytest.raises(AllMasked):
        T.masked_softmax(constant([1.0, 2.0]), [0, 0])


def test_no_broadcasting():
    with pytest.raises(ShapeMismatch):
        T.add(constant(np.ones((2, 3))), constant(np.ones((1, 3))))
    with pytest.raises(ShapeMismatch):
        T.matmul(constant(np.ones((2, 3))), constant(np.ones((2, 3))))


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        constant([1.0, np.nan])


def test_activation_dispatch():
    x = constant([-1.0, 0.0, 2.0])
    assert T.activation("relu", x).value.tolist() == [0.0, 0.0, 2.0]
    np.testing.assert_allclose(T.activation("sigmoid", x).value, 1 / (1 + np.exp([1.0, 0.0, -2.0])))
    with pytest.raises(ValueError):
        T.activation("gelu", x)


def test_xavier_shape_and_bounds():
    w = xavier_init(50, 50, np.random.default_rng(0)).value
    assert w.size == 2500
    limit = math.sqrt(6 / 100)
    assert np.abs(w).max() <= limit
    # uniform on [-l, l] has variance l^2 / 3
    assert abs(w.var() - limit**2 / 3) < 0.1 * limit**2 / 3


def test_adam_zero_gradient_fresh_state():
    p = Parameter(np.array([[1.5, -2.0]]), "p")
    p.grad = np.zeros_like(p.value)
    adam_step([p], AdamState(), 0.001)
    assert p.value.tolist() == [[1.5, -2.0]]


def test_adam_matches_scalar_reference():
    p = Parameter(np.array([[0.7]]), "p")
    state = AdamState()
    ref, m, v = 0.7, 0.0, 0.0
    for t, g in enumerate([0.3, -1.2, 0.05, 2.0], start=1):
        p.grad = np.array([[g]])
        adam_step([p], state, 0.01)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref -= 0.01 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert p.value[0, 0] == pytest.approx(ref, abs=1e-15)


def test_adam_first_step_is_lr_sized():
    p = Parameter(np.array([[0.0, 0.0]]), "p")
    p.grad = np.array([[3.0, -1e-3]])
    adam_step([p], AdamState(), 0.001)
    np.testing.assert_allclose(p.value, [[-0.001, 0.001]], rtol=1e-4)


def test_gradients_pure_and_backward_writes():
    w = Parameter(np.array([[2.0]]), "w")
    x = constant([[3.0]])
    root = T.sum(T.matmul(x, w))
    (g,) = gradients(root, [w])
    assert g.tolist() == [[3.0]]
    assert w.grad is None or not np.any(w.grad)
    backward(root, [w])
    assert w.grad.tolist() == [[3.0]]


def test_shared_parameter_accumulates():
    w = Parameter(np.array([[2.0]]), "w")
    root = T.sum(T.mul(w, w))
    assert gradients(root, [w])[0].tolist() == [[4.0]]


def test_masked_max_routes_to_first_argmax():
    m = Parameter(np.array([[1.0, 3.0, 3.0], [2.0, 2.0, 9.0]]), "m")
    out = T.masked_max(m, [1, 1], [1, 1, 0], axis=1)
    assert out.value.tolist() == [3.0, 2.0]
    (g,) = gradients(T.sum(out), [m])
    assert g.tolist() == [[0, 1, 0], [1, 0, 0]]


def test_bce_values():
    half = constant([[0.5]])
    assert T.binary_cross_entropy(half, 1).item() == pytest.approx(math.log(2), abs=1e-15)
    assert T.binary_cross_entropy(half, 0).item() == pytest.approx(math.log(2), abs=1e-15)
    assert T.binary_cross_entropy(constant([[1.0 - 1e-15]]), 1).item() < 1e-11
    # clamping keeps the loss finite at the boundary
    assert math.isfinite(T.binary_cross_entropy(constant([[0.0]]), 1).item())


def test_grad_check_negative_control():
    rng = np.random.default_rng(0)
    a = Parameter(rng.normal(size=(3, 4)), "a")
    b = Parameter(rng.normal(size=(4, 2)), "b")

    def comp():
        return T.sum(T.tanh(T.matmul(a, b)))

    assert grad_check(comp, [a, b]) <= 1e-6
    good = gradients(comp(), [a, b])
    bad = [good[0] * 1.1, good[1]]
    assert grad_check(comp, [a, b], analytic=bad) > 1e-2


def test_batched_grad_check_agrees_with_looped():
    rng = np.random.default_rng(2)
    a = Parameter(rng.normal(size=(3, 4)), "a")
    x = rng.normal(size=(2, 3))

    def comp():
        return T.sum(T.sigmoid(T.matmul(constant(x), a)))

    def batched(index, values):
        return (1 / (1 + np.exp(-np.einsum("ij,kjl->kil", x, values)))).sum(axis=(1, 2))

    looped = grad_check(comp, [a])
    fast = grad_check(comp, [a], batched=batched, chunk=5)
    assert looped <= 1e-7 and fast <= 1e-7


OPS = ["tanh", "sigmoid", "relu", "mul", "add", "concat", "transpose", "softmax", "max0", "max1"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.sampled_from(OPS), min_size=1, max_size=4))
def test_random_compositions_pass_grad_check(seed, ops):
    rng = np.random.default_rng(seed)
    # scaled so that repeated squaring stays O(1) and central differences stay accurate
    a = Parameter(0.5 * rng.normal(size=(3, 3)), "a")
    b = Parameter(0.5 * rng.normal(size=(3, 3)), "b")
    mask_r = np.array([1.0, 1.0, 0.0])
    mask_c = np.array([1.0, 0.0, 1.0])

    def comp():
        x = T.matmul(a, b)
        for op in ops:
            if op == "tanh":
                x = T.tanh(x)
            elif op == "sigmoid":
                x = T.sigmoid(x)
            elif op == "relu":
                x = T.relu(T.add(x, constant(np.full(x.shape, 0.05))))
            elif op == "mul":
                x = T.mul(x, x)
            elif op == "add":
                x = T.add(x, a if x.shape == a.shape else x)
            elif op == "concat":
                x = T.concat([x, x], axis=0)
            elif op == "transpose":
                x = T.transpose(x)
            elif op in ("softmax", "max0", "max1") and x.shape == (3, 3):
                if op == "softmax":
                    x = T.masked_softmax(T.reshape(x, (9,)), np.ones(9))
                    x = T.reshape(x, (3, 3))
                else:
                    axis = int(op[-1])
                    v = T.masked_max(x, mask_r, mask_c, axis)
                    x = T.matmul(T.reshape(v, (3, 1)), T.reshape(v, (1, 3)))
        return T.sum(x)

    val = comp().item()
    assert math.isfinite(val)
    # the floor stops near-zero gradient entries from dominating the relative error
    assert grad_check(comp, [a, b], floor=1e-4) <= 1e-4
