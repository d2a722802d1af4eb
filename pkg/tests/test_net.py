import numpy as np
import pytest

from smac_rl.net import Mlp, MlpSpec
from smac_rl.numcore import DimensionError, finite_diff_grad, make_rng

from conftest import rel_err


def small_net(seed=0, widths=(3, 5, 4, 2)):
    spec = MlpSpec(widths[0], widths[-1], widths[1:-1])
    net = Mlp.init(spec, make_rng(seed))
    # non-zero biases so their gradients are exercised
    net.set_params(net.params + 0.1 * make_rng(seed + 1).standard_normal(net.dim))
    return net


def test_param_count_formula():
    spec = MlpSpec(4, 2, (64, 64))
    assert spec.n_params == 4 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2 == 4610


def test_init_deterministic_and_zero_bias():
    spec = MlpSpec(4, 2, (64, 64))
    a = Mlp.init(spec, make_rng(3))
    b = Mlp.init(spec, make_rng(3))
    np.testing.assert_array_equal(a.params, b.params)
    for W, bias in a.layers:
        assert np.all(bias == 0.0)
        bound = 1 / np.sqrt(W.shape[0])
        assert np.all(np.abs(W) <= bound)


def test_param_roundtrip_bit_exact():
    net = small_net()
    p = net.get_params()
    net.set_params(p)
    np.testing.assert_array_equal(net.get_params(), p)


def test_zero_weights_give_output_bias():
    net = small_net()
    theta = np.zeros(net.dim)
    net.set_params(theta)
    net.layers[-1][1][:] = [0.3, -0.7]
    np.testing.assert_array_equal(net.forward(np.array([1.0, 2.0, 3.0])), [0.3, -0.7])


def test_tiny_net_tanh_zero():
    net = Mlp(MlpSpec(1, 1, (1,)), np.array([1.0, 0.0, 1.0, 0.0]))
    assert net.forward(np.array([0.0]))[0] == 0.0


def test_saturated_inputs_stay_finite():
    net = small_net()
    for scale in (1e3, 1e6):
        out = net.forward(np.array([scale, -scale, scale]))
        assert np.all(np.isfinite(out))


def test_forward_rejects_wrong_dim():
    with pytest.raises(DimensionError):
        small_net().forward(np.ones(4))
    with pytest.raises(DimensionError):
        small_net().backward(np.ones(3), np.ones(3))


def test_backward_zero_upstream():
    net = small_net()
    np.testing.assert_array_equal(net.backward(np.ones(3), np.zeros(2)), np.zeros(net.dim))


def test_backward_linear_in_upstream():
    net = small_net()
    x = np.array([0.2, -0.4, 1.1])
    u1, u2 = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    np.testing.assert_allclose(net.backward(x, u1 + u2), net.backward(x, u1) + net.backward(x, u2),
                               rtol=1e-12, atol=1e-14)


def _fd_check(net, x, u):
    theta0 = net.get_params()

    def f(theta):
        net.set_params(theta)
        return float(u @ net.forward(x))

    fd = finite_diff_grad(f, theta0, 1e-5)
    net.set_params(theta0)
    return rel_err(net.backward(x, u), fd)


def test_backward_matches_finite_differences():
    rng = make_rng(99)
    worst = 0.0
    for trial in range(100):
        widths = (int(rng.integers(1, 6)), *rng.integers(1, 12, size=int(rng.integers(1, 3))),
                  int(rng.integers(1, 4)))
        net = small_net(trial, tuple(int(w) for w in widths))
        assert net.dim <= 500
        x = rng.standard_normal(widths[0])
        u = rng.standard_normal(widths[-1])
        worst = max(worst, _fd_check(net, x, u))
    assert worst < 1e-4


def test_batch_helpers_agree_with_single_sample():
    net = small_net()
    rng = make_rng(5)
    X = rng.standard_normal((7, 3))
    U = rng.standard_normal((7, 2))
    rows = np.array([net.backward(x, u) for x, u in zip(X, U)])
    np.testing.assert_allclose(net.per_sample_grads(X, U), rows, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(net.backward(X, U), rows.sum(axis=0), rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(net.per_sample_sq_norms(X, U), (rows ** 2).sum(axis=1), rtol=1e-12)


def test_checkpoint_roundtrip():
    net = small_net()
    back = Mlp.from_json(net.to_json())
    assert back.spec == net.spec
    np.testing.assert_array_equal(back.params, net.params)


def test_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec(0, 2)
    with pytest.raises(ValueError):
        MlpSpec(2, 2, (4,), activation="relu")
