import numpy as np
import pytest

import monoglot.tensor as T
from conftest import finite_difference, rel_error


def t64(arr, grad=True):
    return T.Tensor(np.asarray(arr, dtype=np.float64), requires_grad=grad)


class TestMatmul:
    def test_identity_left(self):
        a = T.Tensor([[1.0, 2.0], [3.0, 4.0]])
        eye = T.Tensor(np.eye(2, dtype=np.float32))
        assert np.allclose(T.matmul(eye, a).data, a.data)

    def test_identity_right(self):
        a = T.Tensor([[1.0, 2.0], [3.0, 4.0]])
        eye = T.Tensor(np.eye(2, dtype=np.float32))
        assert np.allclose(T.matmul(a, eye).data, [[1, 2], [3, 4]])

    def test_hand_product(self):
        a = T.Tensor([[1.0, 2.0]])
        b = T.Tensor([[3.0], [4.0]])
        assert np.allclose(T.matmul(a, b).data, [[11.0]])

    def test_shape_mismatch_names_both_shapes(self):
        a = T.Tensor(np.zeros((2, 3)))
        b = T.Tensor(np.zeros((2, 3)))
        with pytest.raises(T.ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            T.matmul(a, b)


class TestSoftmax:
    def test_symmetry(self):
        out = T.softmax(T.Tensor([0.0, 0.0])).data
        assert np.allclose(out, [0.5, 0.5])

    def test_shift_invariance(self):
        x = T.Tensor([0.3, -1.2, 2.0])
        shifted = T.Tensor(x.data + 7.5)
        assert np.allclose(T.softmax(x).data, T.softmax(shifted).data, atol=1e-6)

    def test_closed_form(self):
        out = T.softmax(T.Tensor([np.log(1.0), np.log(3.0)])).data
        assert np.allclose(out, [0.25, 0.75], atol=1e-6)

    def test_slices_sum_to_one(self):
        rng = np.random.default_rng(0)
        x = T.Tensor(rng.normal(size=(4, 5, 6)).astype(np.float32))
        out = T.softmax(x, axis=-1).data
        assert np.allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_empty_axis_raises(self):
        with pytest.raises(T.ShapeError):
            T.softmax(T.Tensor(np.zeros((2, 0))))


class TestLayerNorm:
    def test_constant_vector_is_zero(self):
        x = T.Tensor([3.0, 3.0, 3.0])
        out = T.layer_norm(x, T.Tensor(np.ones(3)), T.Tensor(np.zeros(3)))
        assert np.allclose(out.data, 0.0, atol=1e-3)

    def test_two_point(self):
        out = T.layer_norm(
            T.Tensor([1.0, 3.0]), T.Tensor(np.ones(2)), T.Tensor(np.zeros(2))
        )
        assert np.allclose(out.data, [-1.0, 1.0], atol=1e-4)

    def test_output_mean_zero(self):
        rng = np.random.default_rng(1)
        x = T.Tensor(rng.normal(size=(3, 8)).astype(np.float32))
        out = T.layer_norm(x, T.Tensor(np.ones(8)), T.Tensor(np.zeros(8)))
        assert np.all(np.abs(out.data.mean(axis=-1)) <= 1e-5)

    def test_empty_axis_raises(self):
        with pytest.raises(T.ShapeError):
            T.layer_norm(T.Tensor(np.zeros((2, 0))), T.Tensor([]), T.Tensor([]))


class TestBackward:
    def test_dot_gradient_is_other_vector(self):
        x = T.Tensor([1.0, 2.0, 3.0], requires_grad=True)
        y = T.Tensor([4.0, 5.0, 6.0])
        loss = T.tsum(x * y)
        T.backward(loss)
        assert np.allclose(x.grad, y.data)

    def test_relu_subgradient_zero_at_zero(self):
        x = T.Tensor([-1.0, 2.0], requires_grad=True)
        T.backward(T.tsum(T.relu(x)))
        assert np.allclose(x.grad, [0.0, 1.0])
        x0 = T.Tensor([0.0], requires_grad=True)
        T.backward(T.tsum(T.relu(x0)))
        assert np.allclose(x0.grad, [0.0])

    def test_non_scalar_loss_rejected(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(T.TensorError):
            T.backward(x * x)

    def test_graph_reuse_raises(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        loss = T.tsum(x * x)
        T.backward(loss)
        with pytest.raises(T.GraphReuseError):
            T.backward(loss)

    def test_params_reusable_across_graphs(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        T.backward(T.tsum(x * x))
        x.zero_grad()
        T.backward(T.tsum(x * x * x))
        assert np.allclose(x.grad, 3.0 * x.data**2)


def _composite(x):
    """A graph touching most primitives."""
    a = T.reshape(x, (2, 4))
    b = T.softmax(a, axis=-1)
    g = T.Tensor(np.ones(4, dtype=x.dtype), requires_grad=False)
    z = T.Tensor(np.zeros(4, dtype=x.dtype), requires_grad=False)
    c = T.layer_norm(a, g, z)
    d = T.relu(a) + b * c
    e = T.matmul(d, T.transpose(d, (1, 0)))
    return T.tsum(T.log(T.exp(e) + T.Tensor(np.ones(1, dtype=x.dtype))))


@pytest.mark.parametrize("seed", range(100))
def test_composite_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=8)
    x = t64(x0)
    T.backward(_composite(x))

    def f(arr):
        return _composite(T.Tensor(arr, requires_grad=False)).item()

    fd = finite_difference(f, x0)
    assert rel_error(x.grad, fd) <= 1e-3


@pytest.mark.parametrize(
    "name,fn,shape",
    [
        ("softmax", lambda x: T.tsum(T.softmax(x, axis=-1) * T.Tensor(np.arange(12, dtype=np.float64).reshape(3, 4))), (3, 4)),
        ("layer_norm", lambda x: T.tsum(
            T.layer_norm(x, T.Tensor(np.full(4, 1.5)), T.Tensor(np.full(4, 0.5)))
            * T.Tensor(np.arange(12, dtype=np.float64).reshape(3, 4))), (3, 4)),
        ("matmul", lambda x: T.tsum(T.matmul(x, T.transpose(x, (1, 0)))), (3, 4)),
        ("relu", lambda x: T.tsum(T.relu(x) * T.relu(x)), (3, 4)),
        ("mean", lambda x: T.tmean(x * x), (3, 4)),
        ("max", lambda x: T.tsum(T.tmax(x, axis=1)), (3, 4)),
        ("div", lambda x: T.tsum(x / (x * x + T.Tensor(np.ones((3, 4)) * 2.0))), (3, 4)),
    ],
)
def test_primitive_gradients(name, fn, shape):
    for seed in range(10):
        rng = np.random.default_rng(seed)
        x0 = rng.normal(size=shape)
        x = t64(x0)
        T.backward(fn(x))
        fd = finite_difference(lambda arr: fn(T.Tensor(arr)).item(), x0)
        assert rel_error(x.grad, fd) <= 1e-3, name


def test_embedding_gradient_scatters():
    w = t64(np.arange(12, dtype=np.float64).reshape(4, 3))
    out = T.embedding(w, np.array([1, 1, 3]))
    T.backward(T.tsum(out))
    expected = np.zeros((4, 3))
    expected[1] = 2
    expected[3] = 1
    assert np.allclose(w.grad, expected)


def test_embedding_out_of_range():
    w = T.Tensor(np.zeros((4, 3)), requires_grad=True)
    with pytest.raises(T.ShapeError):
        T.embedding(w, np.array([4]))


def test_cross_entropy_uniform_logits():
    v = 7
    logits = T.Tensor(np.zeros((5, v)), requires_grad=True)
    loss = T.cross_entropy_logits(logits, np.zeros(5, dtype=np.int64))
    assert np.isclose(loss.item() / 5, np.log(v), atol=1e-5)


def test_cross_entropy_gradient():
    rng = np.random.default_rng(3)
    x0 = rng.normal(size=(4, 5))
    targets = np.array([0, 2, 4, 1])
    mask = np.array([1.0, 1.0, 0.0, 1.0])
    x = t64(x0)
    T.backward(T.cross_entropy_logits(x, targets, mask, smoothing=0.1))

    def f(arr):
        return T.cross_entropy_logits(T.Tensor(arr), targets, mask, smoothing=0.1).item()

    assert rel_error(x.grad, finite_difference(f, x0)) <= 1e-3


class TestAdam:
    def test_first_step_is_signed_lr(self):
        p = {"w": T.Tensor([1.0], requires_grad=True)}
        state = T.AdamState(lr=0.1)
        T.adam_step(p, {"w": np.array([0.5], dtype=np.float32)}, state)
        assert np.isclose(p["w"].data[0], 1.0 - 0.1, atol=1e-4)
        assert state.step == 1

    def test_zero_gradient_no_change(self):
        p = {"w": T.Tensor([1.0, -2.0], requires_grad=True)}
        state = T.AdamState(lr=0.1)
        T.adam_step(p, {"w": np.zeros(2, dtype=np.float32)}, state)
        assert np.allclose(p["w"].data, [1.0, -2.0])

    def test_two_identical_steps(self):
        p = {"w": T.Tensor([0.0], requires_grad=True)}
        state = T.AdamState(lr=0.1)
        for _ in range(2):
            T.adam_step(p, {"w": np.array([1.0], dtype=np.float32)}, state)
        assert np.isclose(p["w"].data[0], -0.2, atol=1e-3)

    def test_nan_gradient_names_parameter(self):
        p = {"bad_param": T.Tensor([0.0], requires_grad=True)}
        with pytest.raises(T.TensorError, match="bad_param"):
            T.adam_step(p, {"bad_param": np.array([np.nan], dtype=np.float32)},
                        T.AdamState())

    def test_nonpositive_lr_rejected(self):
        with pytest.raises(ValueError):
            T.adam_step({}, {}, T.AdamState(lr=0.0))


def test_clip_grads_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    norm = T.clip_grads(grads, 1.0)
    assert np.isclose(norm, 5.0)
    total = np.sqrt(grads["a"][0] ** 2 + grads["b"][0] ** 2)
    assert np.isclose(total, 1.0)


def test_finite_check_flags_nan():
    with pytest.raises(T.TensorError):
        T.log(T.Tensor([-1.0]))
