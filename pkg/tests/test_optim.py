import numpy as np
import pytest

from pastel.errors import NonFiniteGradient, ShapeMismatch
from pastel.optim import OptimizerState, optimizer_step


def test_zero_decays_reduce_to_plain_gradient_descent():
    params = {"p": np.array([1.0])}
    opt = OptimizerState(lr=0.1, beta1=0.0, beta2=0.0)
    optimizer_step(params, {"p": np.array([2.0])}, opt)
    assert params["p"][0] == pytest.approx(0.8, abs=1e-12)


def test_zero_decays_match_hand_gd_over_many_steps(rng):
    params = {"w": rng.standard_normal((3, 2))}
    reference = params["w"].copy()
    opt = OptimizerState(lr=0.05, beta1=0.0, beta2=0.0)
    for _ in range(7):
        g = rng.standard_normal((3, 2))
        optimizer_step(params, {"w": g}, opt)
        reference -= 0.05 * g
    assert np.abs(params["w"] - reference).max() <= 1e-12


def test_zero_gradient_leaves_parameters_unchanged():
    params = {"p": np.array([1.5, -2.0])}
    before = params["p"].copy()
    opt = OptimizerState()
    optimizer_step(params, {"p": np.zeros(2)}, opt)
    optimizer_step(params, {"p": np.zeros(2)}, opt)
    assert np.array_equal(params["p"], before)


def test_constant_gradient_moves_monotonically_against_its_sign():
    # hand-iterate the default adaptive rule on a scalar
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    g = 3.0
    p_ref = 1.0
    m = v = 0.0
    expected = []
    for t in range(1, 4):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p_ref -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        expected.append(p_ref)

    params = {"p": np.array([1.0])}
    opt = OptimizerState(lr=lr)
    seen = []
    for _ in range(3):
        optimizer_step(params, {"p": np.array([g])}, opt)
        seen.append(float(params["p"][0]))
    assert seen == pytest.approx(expected, abs=1e-12)
    assert seen[0] < 1.0 and seen[1] < seen[0] and seen[2] < seen[1]


def test_nonfinite_gradient_rejected():
    params = {"p": np.array([1.0])}
    opt = OptimizerState()
    with pytest.raises(NonFiniteGradient):
        optimizer_step(params, {"p": np.array([np.nan])}, opt)
    assert params["p"][0] == 1.0  # untouched


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeMismatch):
        optimizer_step(
            {"p": np.zeros(2)}, {"p": np.zeros(3)}, OptimizerState()
        )


def test_step_count_increases():
    opt = OptimizerState()
    params = {"p": np.zeros(1)}
    for expected in (1, 2, 3):
        optimizer_step(params, {"p": np.ones(1)}, opt)
        assert opt.step_count == expected
