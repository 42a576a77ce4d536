import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurofuzzy.data import split_random
from neurofuzzy.errors import DivergenceError, InvalidArgumentError
from neurofuzzy.mlp import LmConfig, MlpModel, fit_bnn, init_mlp, mlp_forward, mlp_jacobian, train_lm


def fd_jacobian(model, x, h=1e-6):
    theta = model.params()
    jac = np.empty((len(x), theta.size))
    for p in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[p] += h
        down[p] -= h
        jac[:, p] = (model.with_params(up).predict(x) - model.with_params(down).predict(x)) / (2 * h)
    return jac


def random_net(rng, sizes):
    ws = tuple(rng.normal(size=(b, a)) for a, b in zip(sizes[:-1], sizes[1:]))
    bs = tuple(rng.normal(size=b) for b in sizes[1:])
    return MlpModel(ws, bs)


def linear_problem(seed, n=200):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    y = x @ np.array([1.5, -2.0, 0.5]) + 0.3 + rng.normal(scale=0.2, size=n)
    a = np.column_stack([x, np.ones(n)])
    oracle = float(np.sum((a @ (np.linalg.pinv(a) @ y) - y) ** 2))
    return x, y, oracle


class TestInit:
    def test_parameter_count(self):
        # 3*10 + 10 + 10*10 + 10 + 10*1 + 1
        assert init_mlp((3, 10, 10, 1), 0).n_params == 161

    def test_deterministic(self):
        a, b = init_mlp((3, 10, 10, 1), 123), init_mlp((3, 10, 10, 1), 123)
        np.testing.assert_array_equal(a.params(), b.params())
        assert not np.array_equal(a.params(), init_mlp((3, 10, 10, 1), 124).params())

    def test_biases_zero_and_bounds(self):
        m = init_mlp((3, 10, 10, 1), 1)
        for w, b in zip(m.weights, m.biases):
            assert np.all(b == 0)
            bound = math.sqrt(6 / (w.shape[0] + w.shape[1]))
            assert np.abs(w).max() <= bound

    def test_shapes_chain(self):
        m = init_mlp((3, 7, 5, 1), 2)
        assert [w.shape for w in m.weights] == [(7, 3), (5, 7), (1, 5)]
        assert m.layer_sizes == (3, 7, 5, 1)

    @pytest.mark.parametrize("sizes", [(3, 0, 1), (0, 4, 1), (3,)])
    def test_invalid_sizes(self, sizes):
        with pytest.raises(InvalidArgumentError):
            init_mlp(sizes, 0)

    def test_params_round_trip(self):
        m = init_mlp((3, 4, 4, 1), 3)
        theta = np.arange(m.n_params, dtype=float)
        np.testing.assert_array_equal(m.with_params(theta).params(), theta)


class TestForward:
    def test_zero_network(self):
        m = init_mlp((3, 10, 10, 1), 0).with_params(np.zeros(161))
        assert mlp_forward(m, np.array([4.0, -2.0, 9.0])) == 0.0

    def test_constant_network(self):
        m = init_mlp((3, 10, 10, 1), 0)
        theta = np.zeros(161)
        theta[-1] = 2.5
        assert mlp_forward(m.with_params(theta), np.array([1.0, 2.0, 3.0])) == 2.5

    def test_hand_unrolled(self):
        rng = np.random.default_rng(4)
        m = random_net(rng, (3, 2, 2, 1))
        x = np.array([0.3, -1.1, 0.7])
        (w1, w2, w3), (b1, b2, b3) = m.weights, m.biases
        h1 = [math.tanh(sum(w1[i, k] * x[k] for k in range(3)) + b1[i]) for i in range(2)]
        h2 = [math.tanh(sum(w2[i, k] * h1[k] for k in range(2)) + b2[i]) for i in range(2)]
        y = sum(w3[0, k] * h2[k] for k in range(2)) + b3[0]
        assert mlp_forward(m, x) == pytest.approx(y, rel=1e-13)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            mlp_forward(init_mlp((3, 2, 1), 0), np.zeros(4))


class TestJacobian:
    def test_constant_network_residuals(self):
        m = init_mlp((3, 4, 4, 1), 0)
        theta = np.zeros(m.n_params)
        theta[-1] = -1.25
        x = np.random.default_rng(0).normal(size=(6, 3))
        e, _ = mlp_jacobian(m.with_params(theta), x, np.full(6, -1.25))
        np.testing.assert_array_equal(e, 0.0)

    def test_output_bias_column_is_ones(self):
        m = init_mlp((3, 4, 4, 1), 5)
        x = np.random.default_rng(1).normal(size=(10, 3))
        _, jac = mlp_jacobian(m, x, np.zeros(10))
        np.testing.assert_array_equal(jac[:, -1], 1.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        m = random_net(rng, (3, 4, 4, 1))
        x = rng.normal(size=(10, 3))
        _, jac = mlp_jacobian(m, x, np.zeros(10))
        fd = fd_jacobian(m, x)
        np.testing.assert_allclose(jac, fd, rtol=1e-4, atol=1e-4 * np.abs(fd).max())

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        hidden=st.lists(st.integers(1, 6), min_size=1, max_size=3),
        activation=st.sampled_from(["tanh", "identity"]),
    )
    def test_matches_finite_differences_random(self, seed, hidden, activation):
        rng = np.random.default_rng(seed)
        m = random_net(rng, (3, *hidden, 1))
        m = MlpModel(m.weights, m.biases, activation)
        x = rng.normal(size=(8, 3))
        e, jac = mlp_jacobian(m, x, np.ones(8))
        np.testing.assert_allclose(e, m.predict(x) - 1.0)
        fd = fd_jacobian(m, x)
        np.testing.assert_allclose(jac, fd, rtol=1e-4, atol=1e-4 * np.abs(fd).max())

    def test_non_finite_output(self):
        m = init_mlp((3, 1), 0, "identity")
        with pytest.raises(DivergenceError):
            mlp_jacobian(m.with_params([np.inf, 0, 0, 0]), np.ones((2, 3)), np.zeros(2))


class TestLevenbergMarquardt:
    @pytest.mark.parametrize("sizes", [(3, 1), (3, 4, 4, 1)])
    @pytest.mark.parametrize("seed", range(3))
    def test_linear_problem_reaches_pinv_sse(self, sizes, seed):
        x, y, oracle = linear_problem(seed)
        _, hist = train_lm(init_mlp(sizes, seed, "identity"), (x, y), (x, y), LmConfig())
        assert abs(hist.train_sse[-1] - oracle) <= 1e-6
        assert np.all(np.diff(hist.train_sse) <= 0)

    def test_teacher_student(self):
        rng = np.random.default_rng(7)
        teacher = init_mlp((3, 5, 5, 1), 2024)
        x, xv = rng.uniform(-1, 1, size=(500, 3)), rng.uniform(-1, 1, size=(200, 3))
        y, yv = teacher.predict(x), teacher.predict(xv)
        student, hist = train_lm(init_mlp((3, 5, 5, 1), 7), (x, y), (xv, yv), LmConfig(max_iters=200, seed=7))
        assert len(hist.steps) - 1 <= 200
        assert math.sqrt(np.mean((student.predict(x) - y) ** 2)) <= 0.05
        assert np.all(np.diff(hist.train_sse) <= 0)

    def test_returns_best_validation(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=(60, 3))
        y = np.sin(3 * x[:, 0]) + rng.normal(scale=0.3, size=60)
        xv = rng.uniform(-1, 1, size=(40, 3))
        yv = np.sin(3 * xv[:, 0]) + rng.normal(scale=0.3, size=40)
        model, hist = train_lm(init_mlp((3, 16, 16, 1), 3), (x, y), (xv, yv), LmConfig(max_iters=60))
        val = float(np.sum((model.predict(xv) - yv) ** 2))
        assert val <= hist.val_sse.min() + 1e-12
        assert val == pytest.approx(hist.val_sse[hist.best_epoch], rel=1e-12)
        assert np.all(np.diff(hist.train_sse) <= 0)

    def test_patience_stops(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1, 1, size=(40, 3))
        y = rng.normal(size=40)
        xv = rng.uniform(-1, 1, size=(40, 3))
        yv = rng.normal(size=40)
        _, hist = train_lm(init_mlp((3, 20, 20, 1), 4), (x, y), (xv, yv), LmConfig(val_patience=2, max_iters=200))
        assert hist.stop_reason == "val_patience"

    def test_deterministic(self):
        x, y, _ = linear_problem(9, 80)
        y = np.tanh(y)
        cfg = LmConfig(max_iters=15)
        m1, h1 = train_lm(init_mlp((3, 5, 1), 1), (x, y), (x[:20], y[:20]), cfg)
        m2, h2 = train_lm(init_mlp((3, 5, 1), 1), (x, y), (x[:20], y[:20]), cfg)
        np.testing.assert_array_equal(m1.params(), m2.params())
        np.testing.assert_array_equal(h1.train_sse, h2.train_sse)

    @pytest.mark.parametrize(
        "kw", [{"lambda0": 0}, {"lambda_up": 1.0}, {"lambda_down": 1.0}, {"max_iters": 0}, {"val_patience": 0}]
    )
    def test_config_validation(self, kw):
        with pytest.raises(InvalidArgumentError):
            LmConfig(**kw)


class TestBnn:
    def test_benchmark_split(self, benchmark):
        split = split_random(benchmark, 0.65, 42)
        reg, hist = fit_bnn(split, (10, 10), LmConfig(seed=42))
        pred = reg.predict(split.test.x)
        assert np.corrcoef(pred, split.test.y)[0, 1] >= 0.9
        # scaled training: the first layer sees values in [-1, 1]
        z = reg.x_scaler.apply(split.train.x)
        assert z.min() == -1.0 and z.max() == 1.0
        assert np.all(np.diff(hist.train_sse) <= 0)
