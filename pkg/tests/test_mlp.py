import math

import numpy as np
import pytest

from mammotex.descriptors import DescriptorVector, Scaler
from mammotex.errors import DimensionMismatch, EmptyDataset, LengthMismatch, NonFiniteLoss
from mammotex.mlp import (LayerSizes, MlpModel, TrainConfig, bipolar_sigmoid, classify, dumps_model, forward,
                          hidden_units_rule1, hidden_units_rule2, loads_model, loss_and_gradients,
                          regression_value, train)

INPUTS = [5, 6, 24, 6, 6, 6, 6, 11, 29]
MLP1 = [4, 4, 16, 4, 4, 4, 4, 8, 20]
MLP2 = [3, 3, 5, 3, 3, 3, 3, 4, 6]


def test_sizing_rules_table():
    assert [hidden_units_rule1(n) for n in INPUTS] == MLP1
    assert [hidden_units_rule2(n, 1) for n in INPUTS] == MLP2
    assert hidden_units_rule1(1) == 1 and hidden_units_rule2(1, 1) == 1


def test_sizing_rules_against_float_formulas():
    for n in range(1, 500):
        assert hidden_units_rule1(n) == math.floor((n + 1) * 2 / 3 + 1e-9)
        for o in (1, 2, 3):
            assert hidden_units_rule2(n, o) == math.ceil(math.sqrt(n * o) - 1e-9)


def test_bipolar_sigmoid_matches_definition():
    z = np.linspace(-30, 30, 601)
    np.testing.assert_allclose(bipolar_sigmoid(z), 2 / (1 + np.exp(-z)) - 1, atol=1e-15)
    assert bipolar_sigmoid(0.0) == 0.0


def zero_model(sizes):
    return MlpModel(sizes, np.zeros((sizes.hidden, sizes.input)), np.zeros(sizes.hidden),
                    np.zeros((1, sizes.hidden)), np.zeros(1))


def test_forward_zero_weights():
    assert forward(zero_model(LayerSizes(5, 4)), np.ones(5)) == 0.0


def test_forward_range(rng):
    for seed in range(50):
        m = MlpModel.initialize(LayerSizes(7, 5), seed)
        for p in m.params:
            p *= rng.uniform(1, 20)
        y = m.forward_batch(rng.normal(scale=5, size=(20, 7)))
        assert ((y > -1) & (y < 1)).all() or np.abs(y).max() <= 1.0


def test_forward_odd_symmetry(rng):
    # an odd activation makes the net odd in (input, biases) jointly
    for _ in range(20):
        W1, b1, W2, b2 = rng.normal(size=4)
        m = MlpModel(LayerSizes(1, 1), [[W1]], [b1], [[W2]], [b2])
        flipped = MlpModel(LayerSizes(1, 1), [[W1]], [-b1], [[W2]], [-b2])
        x = rng.normal(size=1)
        assert forward(flipped, -x) == -forward(m, x)
        # negating the output layer alone also negates the output
        out_neg = MlpModel(LayerSizes(1, 1), [[W1]], [b1], [[-W2]], [-b2])
        assert forward(out_neg, x) == -forward(m, x)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(zero_model(LayerSizes(3, 2)), np.ones(4))


def numeric_gradients(model, X, t, h=1e-5):
    out = []
    for p in model.params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            plus = loss_and_gradients(model, X, t)[0]
            p[idx] = old - h
            minus = loss_and_gradients(model, X, t)[0]
            p[idx] = old
            g[idx] = (plus - minus) / (2 * h)
        out.append(g)
    return out


def max_relative_error(a_list, n_list):
    worst = 0.0
    for a, n in zip(a_list, n_list):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


@pytest.mark.parametrize("seed", range(5))
def test_gradient_check(seed):
    rng = np.random.default_rng(seed)
    m = MlpModel.initialize(LayerSizes(5, 4), seed)
    X = rng.uniform(-1, 1, (8, 5))
    t = rng.choice([-1.0, 1.0], 8)
    _, grads, _ = loss_and_gradients(m, X, t)
    assert max_relative_error(grads, numeric_gradients(m, X, t)) < 1e-5


def separable(rng, n=40):
    X = rng.uniform(-1, 1, (n, 2))
    t = np.where(X[:, 0] + X[:, 1] > 0, 1.0, -1.0)
    X += 0.3 * t[:, None]  # open a margin
    return X, t


def test_separable_converges(rng):
    X, t = separable(rng)
    _, out = train(X, t, LayerSizes(2, 2), TrainConfig(seed=3))
    assert out.converged and out.epochs_used <= 1000 and out.final_mse <= 1e-4
    assert out.regression_train > 0.99


def test_zero_step_leaves_weights(rng):
    X, t = separable(rng)
    cfg = TrainConfig(learning_rate=0.0, momentum=0.0, max_epochs=25, seed=1)
    model, out = train(X, t, LayerSizes(2, 3), cfg)
    init = MlpModel.initialize(LayerSizes(2, 3), 1)
    for a, b in zip(model.params, init.params):
        np.testing.assert_array_equal(a, b)
    assert out.epochs_used == 25 and not out.converged


def test_small_steps_monotone_loss(rng):
    X = rng.uniform(-1, 1, (16, 4))
    t = rng.choice([-1.0, 1.0], 16)
    model = MlpModel.initialize(LayerSizes(4, 3), 9)
    losses = []
    for _ in range(50):
        loss, grads, _ = loss_and_gradients(model, X, t)
        losses.append(loss)
        for p, g in zip(model.params, grads):
            p -= 1e-3 * g
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_trainer_matches_manual_momentum_steps(rng):
    X, t = separable(rng, 10)
    cfg = TrainConfig(max_epochs=3, seed=4)
    model, out = train(X, t, LayerSizes(2, 2), cfg)
    ref = MlpModel.initialize(LayerSizes(2, 2), 4)
    vel = [np.zeros_like(p) for p in ref.params]
    for _ in range(3):
        _, grads, _ = loss_and_gradients(ref, X, t)
        for p, v, g in zip(ref.params, vel, grads):
            v[...] = 0.9 * v - 0.3 * g
            p += v
    for a, b in zip(model.params, ref.params):
        np.testing.assert_allclose(a, b, rtol=1e-14)
    assert out.epochs_used == 3


def test_training_deterministic(rng):
    X, t = separable(rng)
    a, oa = train(X, t, LayerSizes(2, 3), TrainConfig(seed=11, max_epochs=200))
    b, ob = train(X, t, LayerSizes(2, 3), TrainConfig(seed=11, max_epochs=200))
    assert repr(oa) == repr(ob)
    for p, q in zip(a.params, b.params):
        assert p.tobytes() == q.tobytes()


def test_train_errors(rng):
    with pytest.raises(EmptyDataset):
        train(np.zeros((0, 2)), np.zeros(0), LayerSizes(2, 2))
    with pytest.raises(DimensionMismatch):
        train(np.zeros((3, 2)), np.ones(3), LayerSizes(4, 2))
    X, t = separable(rng, 8)
    with pytest.raises(NonFiniteLoss):
        train(X * np.nan, t, LayerSizes(2, 2))


def test_regression_value():
    t = np.array([-1.0, 1.0, 1.0, -1.0, 1.0])
    assert regression_value(t, t) == 1.0
    assert regression_value(-t, t) == -1.0
    assert regression_value(3 * t + 7, t) == pytest.approx(1.0, abs=1e-15)
    assert regression_value(np.ones(5), t) == 0.0
    with pytest.raises(LengthMismatch):
        regression_value(t, t[:3])


def test_regression_matches_numpy(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 12))
        assert regression_value(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], rel=1e-12)
        assert regression_value(2.5 * a - 1, b) == pytest.approx(regression_value(a, b), rel=1e-12)
        assert regression_value(-a, b) == pytest.approx(-regression_value(a, b), rel=1e-12)


def fixed_output_model(z):
    # hidden unit saturated at +1 via a large bias, output pre-activation z
    return MlpModel(LayerSizes(1, 1), [[0.0]], [50.0], [[z]], [0.0])


def test_classify_threshold():
    z_for = lambda y: 2 * math.atanh(y)
    assert classify(fixed_output_model(z_for(0.9)), np.zeros(1)) == "malignant"
    assert classify(fixed_output_model(z_for(-0.9)), np.zeros(1)) == "benign"
    assert classify(fixed_output_model(0.0), np.zeros(1)) == "benign"


def test_classify_applies_scaler():
    m = MlpModel(LayerSizes(1, 1), [[10.0]], [0.0], [[10.0]], [0.0], Scaler([0.0], [10.0]))
    assert classify(m, DescriptorVector(None, [9.0])) == "malignant"
    assert classify(m, DescriptorVector(None, [1.0])) == "benign"


def test_model_persistence_bit_exact(rng, tmp_path):
    X, t = separable(rng)
    model, _ = train(X, t, LayerSizes(2, 2), TrainConfig(seed=2), Scaler([0, 0], [1, 3]))
    path = tmp_path / "model.json"
    model.save(path)
    back = MlpModel.load(path)
    probe = rng.normal(size=(50, 2))
    assert back.forward_batch(probe).tobytes() == model.forward_batch(probe).tobytes()
    assert dumps_model(back) == dumps_model(model)
    assert back.config == model.config
    with pytest.raises(ValueError):
        loads_model('{"format": "other"}')


def test_config_validation():
    for bad in (dict(momentum=1.0), dict(error_goal=0), dict(max_epochs=0), dict(learning_rate=-1)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
