import numpy as np
import pytest

from langgoal import nn


def numeric_grad(f, x, step=1e-5):
    """Central differences of scalar f with respect to every entry of x (in place)."""
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        up = f()
        flat[i] = old - step
        down = f()
        flat[i] = old
        gf[i] = (up - down) / (2 * step)
    return g


def assert_close_grad(analytic, numeric, tol=1e-4):
    assert np.max(nn.rel_error(analytic, numeric)) <= tol


def test_linear_examples():
    x = np.arange(6.0).reshape(2, 3)
    y, _ = nn.linear(x, np.eye(3), np.zeros(3))
    assert np.array_equal(y, x)
    y, _ = nn.linear(x, np.zeros((3, 2)), np.array([1.5, -2.0]))
    assert np.array_equal(y, np.tile([1.5, -2.0], (2, 1)))
    with pytest.raises(nn.ShapeMismatch):
        nn.linear(x, np.zeros((4, 2)), np.zeros(2))


def test_linear_backward(rng):
    x, W, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3)), rng.normal(size=3)
    R = rng.normal(size=(4, 3))
    f = lambda: float(np.sum(nn.linear(x, W, b)[0] * R))
    dx, dW, db = nn.linear_backward(R, nn.linear(x, W, b)[1])
    assert_close_grad(dx, numeric_grad(f, x))
    assert_close_grad(dW, numeric_grad(f, W))
    assert_close_grad(db, numeric_grad(f, b))


def test_activation_values():
    assert np.array_equal(nn.relu(np.array([-1.0, 2.0]))[0], [0.0, 2.0])
    assert nn.sigmoid(np.array([0.0]))[0][0] == 0.5
    y, _ = nn.sigmoid(np.array([-800.0, 800.0]))
    assert np.array_equal(y, [nn.SIGMOID_EPS, 1 - nn.SIGMOID_EPS])
    assert np.all(np.isfinite(y))


@pytest.mark.parametrize("name", ["relu", "tanh", "sigmoid"])
def test_activation_backward(name, rng):
    fwd, bwd = getattr(nn, name), getattr(nn, name + "_backward")
    x = rng.normal(size=(3, 4))
    x[np.abs(x) < 1e-3] = 0.5  # keep away from the relu kink
    R = rng.normal(size=x.shape)
    f = lambda: float(np.sum(fwd(x)[0] * R))
    assert_close_grad(bwd(R, fwd(x)[1]), numeric_grad(f, x))


def test_clamp_logvar():
    lv = np.array([-20.0, 0.5, 30.0])
    out, mask = nn.clamp_logvar(lv)
    assert np.array_equal(out, [-10.0, 0.5, 10.0])
    assert np.array_equal(nn.clamp_backward(np.ones(3), mask), [0.0, 1.0, 0.0])


def _rnn_params(rng, V=6, D=4, H=5, scale=0.5):
    return (rng.normal(scale=scale, size=(V, D)), rng.normal(scale=scale, size=(D, H)),
            rng.normal(scale=scale, size=(H, H)), rng.normal(scale=scale, size=H))


def test_rnn_single_token_zero_weights():
    E, Wx, Wh = np.zeros((3, 4)), np.zeros((4, 5)), np.zeros((5, 5))
    b = np.linspace(-1, 1, 5)
    h, _ = nn.rnn_encode(np.array([[2]]), np.array([1]), E, Wx, Wh, b)
    assert np.allclose(h[0], np.tanh(b))


def test_rnn_order_sensitive(rng):
    params = _rnn_params(rng)
    a, _ = nn.rnn_encode(np.array([[1, 3]]), np.array([2]), *params)
    b, _ = nn.rnn_encode(np.array([[3, 1]]), np.array([2]), *params)
    assert not np.allclose(a, b)


def test_rnn_padding_is_ignored(rng):
    params = _rnn_params(rng)
    tokens, lengths = nn.pad_batch([[1, 2], [4, 0, 5]])
    h, _ = nn.rnn_encode(tokens, lengths, *params)
    alone, _ = nn.rnn_encode(np.array([[1, 2]]), np.array([2]), *params)
    assert np.allclose(h[0], alone[0])


def test_rnn_errors(rng):
    params = _rnn_params(rng)
    with pytest.raises(ValueError):
        nn.pad_batch([[1], []])
    with pytest.raises(ValueError):
        nn.rnn_encode(np.zeros((1, 0), dtype=int), np.array([0]), *params)
    with pytest.raises(IndexError):
        nn.rnn_encode(np.array([[9]]), np.array([1]), *params)


def test_rnn_backward(rng):
    E, Wx, Wh, b = _rnn_params(rng)
    tokens, lengths = nn.pad_batch([[1, 4, 2], [5, 0]])
    R = rng.normal(size=(2, 5))
    f = lambda: float(np.sum(nn.rnn_encode(tokens, lengths, E, Wx, Wh, b)[0] * R))
    _, cache = nn.rnn_encode(tokens, lengths, E, Wx, Wh, b)
    dE, dWx, dWh, db = nn.rnn_backward(R, cache)
    for analytic, p in ((dE, E), (dWx, Wx), (dWh, Wh), (db, b)):
        assert_close_grad(analytic, numeric_grad(f, p))


def test_bce_values():
    t = np.array([[0.0, 1.0, 1.0]])
    loss, _ = nn.bce_loss(np.clip(t, nn.SIGMOID_EPS, 1 - nn.SIGMOID_EPS), t)
    assert loss <= 1e-6
    p = np.full((2, 4), 0.5)
    t = np.zeros((2, 4))
    assert nn.bce_loss(p, t, reduction="mean")[0] == pytest.approx(np.log(2))
    assert nn.bce_loss(p, t, reduction="sum")[0] == pytest.approx(4 * np.log(2))
    with pytest.raises(nn.ShapeMismatch):
        nn.bce_loss(p, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        nn.bce_loss(p, t, reduction="max")


@pytest.mark.parametrize("reduction", ["sum", "mean"])
def test_bce_backward(reduction, rng):
    p = rng.uniform(0.05, 0.95, size=(3, 9))
    t = (rng.uniform(size=p.shape) < 0.5).astype(float)
    _, g = nn.bce_loss(p, t, reduction)
    assert_close_grad(g, numeric_grad(lambda: nn.bce_loss(p, t, reduction)[0], p))


def test_kl_values():
    assert nn.kl_loss(np.zeros((1, 3)), np.zeros((1, 3)))[0] == 0.0
    assert nn.kl_loss(np.ones((1, 1)), np.zeros((1, 1)))[0] == pytest.approx(0.5)
    with pytest.raises(nn.ShapeMismatch):
        nn.kl_loss(np.zeros(2), np.zeros(3))


def test_kl_nonnegative_and_backward(rng):
    for _ in range(20):
        mu, lv = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        assert nn.kl_loss(mu, lv)[0] >= 0
    _, dmu, dlv = nn.kl_loss(mu, lv)
    assert_close_grad(dmu, numeric_grad(lambda: nn.kl_loss(mu, lv)[0], mu))
    assert_close_grad(dlv, numeric_grad(lambda: nn.kl_loss(mu, lv)[0], lv))


def test_adam_zero_gradient():
    params = {"w": np.array([1.0, -2.0])}
    state = nn.AdamState.for_params(params)
    nn.adam_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(params["w"], [1.0, -2.0])
    assert state.step == 1


def test_adam_first_step_is_lr():
    params = {"w": np.array([1.0, -2.0, 0.5])}
    state = nn.AdamState.for_params(params, lr=0.01)
    nn.adam_step(params, {"w": np.array([3.0, -0.2, 1e-3])}, state)
    # bias-corrected m/sqrt(v) = sign(g) on step one
    step = np.array([1.0, -2.0, 0.5]) - params["w"]
    assert np.allclose(step, 0.01 * np.sign([3.0, -0.2, 1e-3]), rtol=1e-4)


def test_adam_deterministic_and_checked():
    def run():
        params = {"w": np.linspace(-1, 1, 5)}
        state = nn.AdamState.for_params(params)
        for k in range(10):
            nn.adam_step(params, {"w": np.sin(params["w"] + k)}, state)
        return params["w"]

    assert np.array_equal(run(), run())
    with pytest.raises(nn.UninitializedState):
        nn.adam_step({"w": np.zeros(1)}, {"w": np.zeros(1)}, nn.AdamState())


def test_param_store():
    ps = nn.ParamStore()
    ps.add("w", np.ones((2, 3)))
    with pytest.raises(KeyError):
        ps.add("w", np.ones(1))
    ps.accumulate("w", np.ones((2, 3)))
    ps.accumulate("w", np.ones((2, 3)))
    assert np.all(ps.grads["w"] == 2)
    with pytest.raises(nn.ShapeMismatch):
        ps.accumulate("w", np.ones(3))
    ps.zero_grad()
    assert not ps.grads["w"].any()
    assert ps.n_values() == 6


def test_glorot_bounds(rng):
    w = nn.glorot(rng, 30, 50)
    assert w.shape == (30, 50)
    assert np.abs(w).max() <= np.sqrt(6 / 80)


def _toy(rng):
    x, y = rng.normal(size=(6, 4)), rng.normal(size=(6, 2))
    params = {"W": rng.normal(size=(4, 2)), "b": rng.normal(size=2)}

    def loss():
        return float(0.5 * np.sum((nn.linear(x, params["W"], params["b"])[0] - y) ** 2))

    out, cache = nn.linear(x, params["W"], params["b"])
    _, dW, db = nn.linear_backward(out - y, cache)
    return loss, params, {"W": dW, "b": db}


def test_gradient_check_quadratic_toy(rng):
    loss, params, grads = _toy(rng)
    report = nn.gradient_check(loss, params, grads, tolerance=1e-8)
    assert report.passed, report.per_param
    assert report.n_checked == 10


def test_gradient_check_catches_corruption(rng):
    loss, params, grads = _toy(rng)
    grads["W"][1, 0] += 0.1
    report = nn.gradient_check(loss, params, grads)
    assert not report.passed
    assert report.per_param["b"] <= 1e-8 < report.per_param["W"]


def test_gradient_check_sampling(rng):
    loss, params, grads = _toy(rng)
    report = nn.gradient_check(loss, params, grads, max_per_param=3, rng=rng, indices={"b": [1]})
    assert report.n_checked == 4


def test_gradient_check_floor_tracks_round_off(rng):
    loss, params, grads = _toy(rng)
    small = nn.gradient_check(loss, params, grads)
    big = nn.gradient_check(lambda: 1e6 + loss(), params, grads)
    assert small.floor == pytest.approx(max(1e-6, loss() * np.finfo(float).eps / 1e-5 / 1e-4))
    assert big.floor > 1e3 * small.floor
