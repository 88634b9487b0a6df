"""Unit test for the Adam optimizer."""

import numpy as np
import pytest
from dcfrec.model.optimizer import AdamState
from dcfrec.model.optimizer import OptimizerConfig
from dcfrec.model.optimizer import adam_step


def test_first_step_moves_by_learning_rate():
    parameters = {"w": np.array([1.0, -2.0])}
    state = AdamState.zeros_like(parameters)
    adam_step(parameters, {"w": np.array([0.5, -3.0])}, state, OptimizerConfig())
    np.testing.assert_allclose(parameters["w"], [0.999, -1.999], atol=1e-6)
    assert state.t == 1


def test_zero_gradient_fixed_point():
    parameters = {"w": np.array([0.3])}
    state = AdamState.zeros_like(parameters)
    for _ in range(10):
        adam_step(parameters, {"w": np.zeros(1)}, state, OptimizerConfig())
    np.testing.assert_array_equal(parameters["w"], [0.3])


def test_missing_gradient_is_frozen():
    parameters = {"w": np.array([1.0]), "h": np.array([2.0])}
    state = AdamState.zeros_like(parameters)
    adam_step(parameters, {"w": np.ones(1)}, state, OptimizerConfig())
    assert parameters["h"][0] == 2.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": 0.0},
        {"beta1": 1.0},
        {"beta2": 0.0},
        {"epsilon": -1.0},
        {"embedding_dim": 0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)
