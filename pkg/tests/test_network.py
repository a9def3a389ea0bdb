import numpy as np
import pytest

from oracles import numeric_grad, rel_error
from thermopan.model import Architecture, Forward, dataset_loss, forward, init_params
from thermopan.model.loss import LossConfig, loss_total
from thermopan.frequency import KernelSpec

TINY = Architecture(width=2, depth=2, dropout=0.0)


def test_shapes_and_range(rng):
    p = init_params(TINY, 0)
    out = forward(p, rng.random((8, 12)))
    assert out.shape == (8, 12, 3)
    assert out.min() > 0 and out.max() < 1
    assert Forward(p, rng.random((3, 8, 8, 1))).output().shape == (3, 8, 8, 3)


def test_divisibility_error(rng):
    with pytest.raises(ValueError, match="divisible"):
        forward(init_params(TINY), rng.random((6, 8)))


def test_channel_error(rng):
    with pytest.raises(ValueError):
        forward(init_params(TINY), rng.random((8, 8, 3)))


def test_deterministic_init():
    a, b = init_params(Architecture(width=4), 3), init_params(Architecture(width=4), 3)
    assert list(a) == list(b)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_default_size_is_about_one_and_a_half_million():
    n = init_params(Architecture()).num_parameters()
    assert 1.3e6 < n < 1.7e6


def test_eval_mode_ignores_dropout(rng):
    p = init_params(Architecture(width=2, depth=2, dropout=0.5))
    x = rng.random((8, 8))
    np.testing.assert_array_equal(forward(p, x), forward(p, x))


def test_end_to_end_gradients(rng):
    # whole network plus loss; random params keep pre-activations away from kinks
    p = init_params(TINY, 1)
    for k in p:
        if k.endswith((".shift", ".b")):
            p[k] = rng.normal(0, 0.3, p[k].shape)
    x = rng.random((1, 8, 8, 1))
    r = rng.normal(size=(1, 8, 8, 3))

    def f():
        return float((Forward(p, x).output() * r).sum())

    fwd = Forward(p, x)
    grads, gx = fwd.backward(r)
    assert list(grads) == list(p)
    for k in ("stem.w", "down1.w", "down2.scale", "up1.w", "up2.shift", "head.w", "head.b"):
        assert rel_error(grads[k], numeric_grad(f, p[k], 1e-5)) < 1e-3, k
    assert rel_error(gx, numeric_grad(f, x, 1e-5)) < 1e-3


def test_dropout_backward_matches_mask(rng):
    arch = Architecture(width=2, depth=1, dropout=0.5)
    p = init_params(arch, 0)
    x = rng.random((1, 4, 4, 1))
    r = rng.normal(size=(1, 4, 4, 3))

    def f():
        return float((Forward(p, x, True, np.random.default_rng(9)).output() * r).sum())

    grads, _ = Forward(p, x, True, np.random.default_rng(9)).backward(r)
    assert rel_error(grads["down1.w"], numeric_grad(f, p["down1.w"], 1e-5)) < 1e-3


def test_loss_through_network(rng):
    p = init_params(TINY, 2)
    x = rng.random((1, 8, 8, 1))
    y = rng.random((1, 8, 8, 3))
    cfg = LossConfig(kernel=KernelSpec(3, 1.0))
    fwd = Forward(p, x)
    grads, _ = fwd.backward(loss_total(fwd.output(), y, cfg).grad)
    num = numeric_grad(lambda: loss_total(Forward(p, x).output(), y, cfg).total, p["head.b"], 1e-6)
    assert rel_error(grads["head.b"], num) < 1e-3


def test_untrained_loss_positive(synthetic16):
    assert dataset_loss(init_params(Architecture(width=2, depth=2)), synthetic16[:2]) > 0
