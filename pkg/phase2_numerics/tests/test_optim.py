"""Tests for the Adam optimizer."""

import numpy as np
import pytest

from phase2_numerics import ops
from phase2_numerics.errors import NonFiniteError, ShapeError
from phase2_numerics.optim import Adam, OptimState, optim_step
from phase2_numerics.tensor import Parameter, Tape


class TestOptimStep:
    def test_zero_gradient_leaves_params(self, rng):
        p = Parameter(rng.normal(size=(3, 4)), "p")
        before = p.data.copy()
        optim_step(OptimState(lr=0.1), [p], {"p": np.zeros((3, 4), dtype=np.float32)})
        np.testing.assert_array_equal(p.data, before)

    def test_first_step_is_minus_sign(self, rng):
        p = Parameter(rng.normal(size=20), "p")
        g = rng.normal(size=20).astype(np.float32)
        before = p.data.copy()
        optim_step(OptimState(lr=1e-2), [p], {"p": g})
        delta = p.data - before
        np.testing.assert_array_equal(np.sign(delta), -np.sign(g))
        np.testing.assert_allclose(np.abs(delta), 1e-2, rtol=1e-3)

    def test_step_counter_increases(self):
        p = Parameter([1.0], "p")
        state = OptimState()
        for expected in range(1, 4):
            optim_step(state, [p], {"p": np.ones(1, dtype=np.float32)})
            assert state.step == expected
        assert state.m["p"].shape == p.shape

    def test_shape_mismatch(self):
        p = Parameter([1.0, 2.0], "p")
        with pytest.raises(ShapeError):
            optim_step(OptimState(), [p], {"p": np.ones(3, dtype=np.float32)})

    def test_non_finite_gradient(self):
        p = Parameter([1.0, 2.0], "p")
        with pytest.raises(NonFiniteError):
            optim_step(OptimState(), [p], {"p": np.array([1.0, np.inf], dtype=np.float32)})

    def test_old_snapshot_untouched(self):
        p = Parameter([1.0, 2.0], "p")
        snapshot = p.data
        optim_step(OptimState(lr=0.5), [p], {"p": np.ones(2, dtype=np.float32)})
        np.testing.assert_array_equal(snapshot, [1.0, 2.0])


class TestAdamTrend:
    def test_quadratic_loss_decreases_every_window(self):
        w = Parameter([3.0], "w")
        opt = Adam([w], lr=1e-2)
        losses = []
        for _ in range(100):
            with Tape() as tape:
                loss = ops.sum(ops.square(w))
            losses.append(loss.item())
            opt.step(tape.gradient(loss, [w]))
        for i in range(len(losses) - 10):
            assert losses[i + 10] < losses[i]

    def test_gradient_clipping_bounds_first_moment(self):
        w = Parameter([0.0, 0.0], "w")
        opt = Adam([w], lr=1e-2, max_grad_norm=1.0)
        opt.step({"w": np.array([30.0, 40.0], dtype=np.float32)})
        np.testing.assert_allclose(opt.state.m["w"], [0.1 * 0.6, 0.1 * 0.8], rtol=1e-5)
