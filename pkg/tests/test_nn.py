import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwqnet.lifting import algorithm1, solve_lift_qp
from pwqnet.nn import (FeedForwardNet, InfeasibleLiftError, Layer, WeightSchemaError,
                       augment_1d, augment_quadratic, build_maxout_net, build_relu_net,
                       dumps_weights, eval_net, eval_scalar_net, export_weights,
                       import_weights, loads_weights)
from pwqnet.pwq import (Pwa1D, Pwq1D, add_pwa, eval_pwa_as_max, eval_pwq,
                        generate_random_convex_pwq)
from pwqnet.verify import sample_points_1d


def within_eps_v(a, ref, eps=1e-8):
    return np.all(np.abs(a - ref) <= eps * (1 + np.abs(ref)))


# -- evaluator ----------------------------------------------------------------

def test_identity_net():
    net = FeedForwardNet((), np.eye(3), np.zeros(3))
    xi = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(eval_net(net, xi), xi)


@pytest.mark.parametrize("x, y", [(-3.0, 0.0), (2.0, 2.0)])
def test_single_relu(x, y):
    net = FeedForwardNet((Layer([[1.0]], [0.0]),), [[1.0]], [0.0])
    assert eval_net(net, [x]) == pytest.approx([y])


def test_maxout_three_channels():
    layer = Layer(np.zeros((3, 1)), [1.0, 5.0, 2.0], "maxout", 3)
    net = FeedForwardNet((layer,), [[1.0]], [0.0])
    assert eval_net(net, [0.0]) == pytest.approx([5.0])


def test_maxout_channel_blocking():
    # two neurons, two channels each: rows (0, 1) -> neuron 1, rows (2, 3) -> neuron 2
    layer = Layer(np.zeros((4, 1)), [1.0, 4.0, -1.0, -3.0], "maxout", 2)
    assert np.array_equal(layer.activate(layer.preactivation(np.zeros(1))), [4.0, -1.0])


def test_batch_shapes():
    net = FeedForwardNet((Layer(np.ones((2, 2)), [0, 0]),), np.ones((1, 2)), [0.0])
    assert eval_net(net, np.ones((5, 2))).shape == (5, 1)
    with pytest.raises(ValueError):
        eval_net(net, np.ones(3))


def test_layer_invariants():
    with pytest.raises(ValueError):
        Layer(np.zeros((5, 2)), np.zeros(5), "maxout", 2)
    with pytest.raises(ValueError):
        Layer(np.zeros((2, 2)), np.zeros(2), "relu", 2)
    with pytest.raises(ValueError):
        FeedForwardNet((Layer(np.zeros((2, 2)), np.zeros(2)), Layer(np.zeros((2, 3)), np.zeros(2))),
                       np.ones((1, 2)), [0])


def test_augmentation():
    assert np.array_equal(augment_1d(3.0), [3.0, 9.0])
    assert np.array_equal(augment_quadratic(np.array([2.0, 3.0])), [2, 3, 4, 6, 9])


# -- max-out builder ----------------------------------------------------------

def test_maxout_channel_rows(ex3, h_alg1):
    net = build_maxout_net(ex3, h_alg1)
    L = net.layers[0]
    assert (L.activation, L.channels, L.width) == ("maxout", 3, 2)
    lifted = [(-20 / 3, 11, -38 / 3), (10 / 3, 5, 10 / 3), (40 / 3, 11, -38 / 3)]
    assert np.abs(np.column_stack([L.W[:3], L.b[:3]]) - lifted).max() <= 1e-9
    second = [(-56 / 3, 0, -56 / 3), (10 / 3, 0, 10 / 3), (76 / 3, 0, -56 / 3)]
    assert np.abs(np.column_stack([L.W[3:], L.b[3:]]) - second).max() <= 1e-9
    assert np.array_equal(net.W_out, [[1.0, -1.0]]) and np.array_equal(net.b_out, [0.0])


def test_maxout_single_segment():
    f = Pwq1D([-1, 1], [(2.0, -1.0, 0.5)])
    net = build_maxout_net(f, Pwa1D.zero(f.breakpoints))
    x = np.linspace(-5, 5, 101)          # exact even off the domain
    assert np.allclose(eval_scalar_net(net, x), 2 * x * x - x + 0.5, atol=1e-12)


def test_maxout_rejects_infeasible(ex3):
    with pytest.raises(InfeasibleLiftError):
        build_maxout_net(ex3, Pwa1D.zero(ex3.breakpoints))


@pytest.mark.parametrize("lift", ["alg1", "qp"])
@given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 20))
def test_maxout_exact(lift, seed, s):
    f = generate_random_convex_pwq(seed, s, (-2.0, 3.0), 2.0)
    h = algorithm1(f) if lift == "alg1" else solve_lift_qp(f)
    net = build_maxout_net(f, h)
    x = sample_points_1d(f, 10_000, 1_000, seed)
    ref = eval_pwq(f, x)
    assert within_eps_v(eval_scalar_net(net, x), ref)
    # neuron decomposition: lifted function, then the lift as a max
    n1, n2 = net.hidden(augment_1d(x))[0].T
    assert within_eps_v(n1, eval_pwq(add_pwa(f, h), x))
    assert np.array_equal(n2, eval_pwa_as_max(h, x))


def test_parameter_counts(ex3, h_alg1):
    s = ex3.s
    mo, relu = build_maxout_net(ex3, h_alg1), build_relu_net(ex3)
    for net in (mo, relu):
        assert net.layers[0].W.shape == (2 * s, 2) and net.layers[0].b.shape == (2 * s,)
    assert mo.W_out.shape == (1, 2) and relu.W_out.shape == (1, 2 * s)
    assert mo.parameter_count() == 6 * s + 3 and relu.parameter_count() == 8 * s + 1


# -- ReLU builder -------------------------------------------------------------

def test_relu_weight_table(ex3):
    net = build_relu_net(ex3)
    L = net.layers[0]
    assert L.width == 6 and L.activation == "relu"
    assert np.allclose(L.W[0], [-8 / 3, -1])
    assert np.allclose(L.b[:3], [-5 / 3, 1, -5 / 3])
    assert np.allclose(L.W[3:], [[-1, 0], [1, 0], [1, 0]])
    assert np.allclose(L.b[3:], [-1, 1, -1])
    kappa = ex3.l + ex3.q * (ex3.lower + ex3.upper)
    assert kappa[1] == 0.0
    assert net.b_out[0] == pytest.approx(5.0)
    assert np.allclose(net.W_out[0], [-11, -5, -11, -kappa[0], kappa[1], kappa[2] - kappa[1]])


def test_relu_verbatim_sign_would_fail(ex3):
    # with +kappa_1 on the left ramp, as printed, the net is off by a lot
    net = build_relu_net(ex3)
    W2 = net.W_out.copy()
    W2[0, 3] *= -1
    bad = FeedForwardNet(net.layers, W2, net.b_out)
    x = np.linspace(*ex3.domain, 1001)
    assert np.abs(eval_scalar_net(bad, x) - eval_pwq(ex3, x)).max() > 1.0


@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_relu_exact(seed, s):
    f = generate_random_convex_pwq(seed, s, (-1.0, 4.0))
    x = sample_points_1d(f, 10_000, 1_000, seed)
    assert within_eps_v(eval_scalar_net(build_relu_net(f), x), eval_pwq(f, x))


def test_relu_needs_continuity():
    with pytest.raises(ValueError):
        build_relu_net(Pwq1D([-1, 0, 1], [(0, 0, 0), (0, 0, 1)]))


def test_relu_ignores_convexity():
    f = Pwq1D([-1, 0, 1], [(0, 1, 0), (1, 0, 0)])      # slope drops at 0
    x = np.linspace(-1, 1, 201)
    assert within_eps_v(eval_scalar_net(build_relu_net(f), x), eval_pwq(f, x))


# -- serialization ------------------------------------------------------------

def test_roundtrip_maxout(ex3, h_alg1, rng):
    net = build_maxout_net(ex3, h_alg1)
    back = loads_weights(dumps_weights(net))
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)
        assert (a.activation, a.channels) == (b.activation, b.channels)
    x = rng.uniform(*ex3.domain, 100)
    assert np.array_equal(eval_scalar_net(back, x), eval_scalar_net(net, x))


@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_roundtrip_bit_exact(seed, s):
    f = generate_random_convex_pwq(seed, s)
    for net in (build_maxout_net(f, algorithm1(f)), build_relu_net(f)):
        back = loads_weights(dumps_weights(net))
        x = np.random.default_rng(seed).uniform(*f.domain, 100)
        assert np.array_equal(eval_scalar_net(back, x), eval_scalar_net(net, x))


def test_schema_activation_field(ex3, h_alg1):
    data = export_weights(build_maxout_net(ex3, h_alg1))
    assert data["layers"][0]["activation"] == {"maxout": 3}
    assert export_weights(build_relu_net(ex3))["layers"][0]["activation"] == "relu"


def test_import_p_not_dividing(ex3, h_alg1):
    data = json.loads(dumps_weights(build_maxout_net(ex3, h_alg1)))
    data["layers"][0]["activation"] = {"maxout": 4}
    with pytest.raises(WeightSchemaError) as exc:
        import_weights(data)
    assert "layer 0" in str(exc.value) and "$.layers[0]" in exc.value.path


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("output"), "$.output"),
    (lambda d: d["layers"][0].pop("b"), "$.layers[0].b"),
    (lambda d: d["layers"][0].update(activation="tanh"), "$.layers[0].activation"),
    (lambda d: d["layers"][0]["W"][1].append(0.0), "$.layers[0].W"),
    (lambda d: d["layers"][0]["W"][0].__setitem__(0, "x"), "$.layers[0].W"),
    (lambda d: d["output"].update(W=[[1.0, 2.0, 3.0]]), "$.output.W"),
    (lambda d: d["layers"][0].update(activation={"maxout": 0}), "$.layers[0].activation.maxout"),
])
def test_import_diagnostics(ex3, h_alg1, mutate, path):
    data = json.loads(dumps_weights(build_maxout_net(ex3, h_alg1)))
    mutate(data)
    with pytest.raises(WeightSchemaError) as exc:
        import_weights(data)
    assert exc.value.path == path


def test_import_invalid_json():
    with pytest.raises(WeightSchemaError):
        loads_weights("{")
