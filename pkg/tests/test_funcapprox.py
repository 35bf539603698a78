import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oac.funcapprox import (AdamState, MlpParams, adam_step, init_mlp, mlp_backward, mlp_forward,
                            polyak_update)

from .oracles import central_difference, max_rel_error, reference_forward


def random_net(rng, sizes=None):
    if sizes is None:
        depth = rng.integers(1, 4)
        sizes = list(rng.integers(1, 7, size=depth + 1))
    return init_mlp(sizes, rng)


def test_zero_weights_give_bias():
    p = MlpParams([np.zeros((2, 3))], [np.array([1.5, -2.0])])
    assert np.array_equal(mlp_forward(p, [4.0, 5.0, 6.0]), [1.5, -2.0])


def test_single_affine_layer():
    p = MlpParams([np.array([[2.0]])], [np.array([1.0])])
    assert mlp_forward(p, [3.0])[0] == 7.0


def test_forward_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = random_net(rng, [4, 6, 5, 2])
        x = rng.normal(size=4)
        assert np.allclose(mlp_forward(p, x), reference_forward(p, x), rtol=1e-13, atol=1e-13)


def test_batched_forward_equals_rowwise():
    rng = np.random.default_rng(1)
    p = random_net(rng, [3, 8, 2])
    xs = rng.normal(size=(7, 3))
    rows = np.array([mlp_forward(p, x) for x in xs])
    assert np.allclose(mlp_forward(p, xs), rows, rtol=1e-14, atol=1e-14)


def test_dimension_mismatch_rejected():
    p = init_mlp([3, 4, 1], np.random.default_rng(0))
    with pytest.raises(ValueError):
        mlp_forward(p, np.zeros(2))
    with pytest.raises(ValueError):
        mlp_backward(p, np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        MlpParams([np.zeros((4, 3)), np.zeros((1, 5))], [np.zeros(4), np.zeros(1)])


def test_forward_is_pure():
    rng = np.random.default_rng(2)
    p = random_net(rng, [5, 7, 3])
    x = rng.normal(size=5)
    before = p.flat()
    assert mlp_forward(p, x).tobytes() == mlp_forward(p, x).tobytes()
    assert np.array_equal(before, p.flat())


def test_linear_net_input_gradient_is_weight_row():
    w = np.array([[0.5, -1.25, 3.0]])
    p = MlpParams([w], [np.array([0.1])])
    g = mlp_backward(p, [1.0, 2.0, 3.0], [1.0])
    assert np.array_equal(g.input, w[0])


def test_zero_upstream_gives_zero_gradients():
    rng = np.random.default_rng(3)
    p = random_net(rng, [3, 5, 2])
    g = mlp_backward(p, rng.normal(size=3), np.zeros(2))
    assert not np.any(g.params.vector) and not np.any(g.input)


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 50:
        p = random_net(rng)
        x = rng.normal(size=p.in_dim)
        up = rng.normal(size=p.out_dim)
        g = mlp_backward(p, x, up)

        def f_params(vec):
            q = p.copy()
            q.set_flat(vec)
            return float(up @ mlp_forward(q, x))

        fd_params = central_difference(f_params, p.flat())
        fd_input = central_difference(lambda z: float(up @ mlp_forward(p, z)), x)
        assert max_rel_error(g.params.vector, fd_params) < 1e-4
        assert max_rel_error(g.input, fd_input) < 1e-4
        checked += 1


def test_batched_backward_sums_rows():
    rng = np.random.default_rng(5)
    p = random_net(rng, [3, 6, 2])
    xs, ups = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    g = mlp_backward(p, xs, ups)
    rowwise = sum(mlp_backward(p, x, u).params.vector for x, u in zip(xs, ups))
    assert np.allclose(g.params.vector, rowwise, rtol=1e-12, atol=1e-12)
    assert np.allclose(g.input, [mlp_backward(p, x, u).input for x, u in zip(xs, ups)])


def test_init_range():
    p = init_mlp([4, 16, 1], np.random.default_rng(0))
    assert np.all(np.abs(p.weights[0]) <= 0.5) and np.all(np.abs(p.weights[1]) <= 0.25)


def test_adam_zero_gradient():
    p = MlpParams([np.array([[1.0, 2.0]])], [np.array([3.0])])
    state = AdamState.for_params(p)
    state.m[:] = 1.0
    state.v[:] = 4.0
    before = p.flat()
    adam_step(state, p, p.zeros_like(), 0.1)
    assert state.t == 1
    assert np.allclose(state.m, 0.9) and np.allclose(state.v, 4.0 * 0.999)
    # decayed moments still move parameters; only an all-zero state stays put
    assert not np.array_equal(p.flat(), before)
    q = MlpParams([np.array([[1.0, 2.0]])], [np.array([3.0])])
    adam_step(AdamState.for_params(q), q, q.zeros_like(), 0.1)
    assert np.array_equal(q.flat(), before)


def test_adam_first_step_is_lr_times_sign():
    rng = np.random.default_rng(6)
    p = random_net(rng, [3, 4, 2])
    g = p.zeros_like()
    g.set_flat(rng.normal(size=p.vector.size) * 10 ** rng.uniform(-3, 3, size=p.vector.size))
    before = p.flat()
    adam_step(AdamState.for_params(p), p, g, 1e-3)
    assert np.allclose(before - p.flat(), 1e-3 * np.sign(g.vector), rtol=1e-4)


def test_adam_quadratic_matches_scalar_recurrence():
    # frozen from an independent scalar Adam recurrence (w0 = 0, lr = 0.1, 100 steps)
    expected = 2.9806554375278127
    p = MlpParams([np.zeros((1, 1))], [np.zeros(1)])
    state = AdamState.for_params(p)
    for _ in range(100):
        g = p.zeros_like()
        g.biases[0][0] = 2.0 * (p.biases[0][0] - 3.0)
        adam_step(state, p, g, 0.1)
    assert abs(p.biases[0][0] - 3.0) < 0.05
    assert p.biases[0][0] == pytest.approx(expected, rel=1e-12)


def test_adam_rejects_nonfinite_and_leaves_params():
    p = MlpParams([np.ones((1, 2))], [np.zeros(1)])
    state = AdamState.for_params(p)
    g = p.zeros_like()
    g.weights[0][0, 1] = np.nan
    with pytest.raises(FloatingPointError):
        adam_step(state, p, g, 0.1)
    assert np.array_equal(p.flat(), [1.0, 1.0, 0.0]) and state.t == 0
    with pytest.raises(ValueError):
        adam_step(state, p, p.zeros_like(), 0.0)


def test_polyak_endpoints_and_small_tau():
    rng = np.random.default_rng(7)
    online = random_net(rng, [2, 3, 1])
    target = online.zeros_like()
    polyak_update(target, online, 0.0)
    assert not np.any(target.vector)
    polyak_update(target, online, 1.0)
    assert np.array_equal(target.vector, online.vector)

    ones = MlpParams([np.ones((1, 1))], [np.ones(1)])
    zeros = ones.zeros_like()
    polyak_update(zeros, ones, 0.005)
    assert np.allclose(zeros.vector, 0.005, rtol=0, atol=1e-18)


def test_polyak_shape_mismatch():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        polyak_update(init_mlp([2, 3, 1], rng), init_mlp([2, 4, 1], rng), 0.5)
    with pytest.raises(ValueError):
        polyak_update(init_mlp([2, 1], rng), init_mlp([2, 1], rng), 1.5)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), tau=st.floats(0.0, 1.0))
def test_polyak_is_convex_combination(seed, tau):
    rng = np.random.default_rng(seed)
    online = init_mlp([3, 4, 2], rng)
    target = init_mlp([3, 4, 2], rng)
    lo = np.minimum(online.vector, target.vector)
    hi = np.maximum(online.vector, target.vector)
    polyak_update(target, online, tau)
    slack = 1e-15
    assert np.all(target.vector >= lo - slack) and np.all(target.vector <= hi + slack)
