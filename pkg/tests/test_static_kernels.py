"""Static kernels and increment-grid construction."""

import numpy as np
import pytest

from sigpde import (
    InputError,
    StaticKernel,
    TimeSeries,
    lifted_increment_grid,
    raw_increment_grid,
)


def test_linear_eval_dot_product():
    k = StaticKernel("linear")
    assert k.evaluate([1.0, 2.0], [1.0, 2.0]) == 5.0


def test_rbf_eval_zero_distance_and_closed_form():
    k = StaticKernel("rbf", bandwidth=1.0)
    assert k.evaluate([0.3, -0.7], [0.3, -0.7]) == 1.0
    assert k.evaluate([0.0], [2.0]) == pytest.approx(np.exp(-2.0), rel=1e-15)


def test_eval_symmetry_and_range():
    rng = np.random.default_rng(0)
    k = StaticKernel("rbf", bandwidth=0.7)
    for _ in range(10):
        a, b = rng.normal(size=(2, 3))
        assert k.evaluate(a, b) == k.evaluate(b, a)
        assert 0.0 < k.evaluate(a, b) <= 1.0


def test_eval_dimension_mismatch():
    with pytest.raises(InputError):
        StaticKernel("linear").evaluate([1.0], [1.0, 2.0])


def test_unknown_kind_and_bad_bandwidth():
    with pytest.raises(InputError):
        StaticKernel("matern")
    with pytest.raises(InputError):
        StaticKernel("rbf")
    with pytest.raises(InputError):
        StaticKernel("rbf", bandwidth=0.0)


def test_raw_grid_values():
    x = np.array([[0.0], [1.0], [3.0]])
    y = np.array([[0.0], [2.0]])
    grid = raw_increment_grid(x, y)
    np.testing.assert_array_equal(grid.values, [[2.0], [4.0]])
    assert grid.rows == 2 and grid.cols == 1
    assert grid.max_abs == 4.0


def test_linear_lift_equals_raw_bitwise():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(7, 3))
    y = rng.normal(size=(5, 3))
    raw = raw_increment_grid(x, y)
    lifted = lifted_increment_grid(StaticKernel("linear"), x, y)
    np.testing.assert_array_equal(lifted.values, raw.values)


def test_transposition_is_exact():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(6, 2))
    y = rng.normal(size=(9, 2))
    for kernel in (StaticKernel("linear"), StaticKernel("rbf", bandwidth=0.8)):
        fwd = lifted_increment_grid(kernel, x, y).values
        bwd = lifted_increment_grid(kernel, y, x).values
        np.testing.assert_array_equal(bwd, fwd.T)
    np.testing.assert_array_equal(raw_increment_grid(y, x).values,
                                  raw_increment_grid(x, y).values.T)


def test_constant_y_gives_zero_grid():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 2))
    y = np.ones((4, 2))
    for kernel in (StaticKernel("linear"), StaticKernel("rbf", bandwidth=1.0)):
        np.testing.assert_array_equal(
            lifted_increment_grid(kernel, x, y).values, np.zeros((4, 3)))


def test_rbf_wide_bandwidth_approaches_scaled_linear():
    # Second-order expansion: rbf grid -> linear grid / sigma^2 as sigma grows.
    rng = np.random.default_rng(4)
    x = rng.normal(size=(6, 2))
    y = rng.normal(size=(6, 2))
    sigma = 1e3
    rbf = lifted_increment_grid(StaticKernel("rbf", bandwidth=sigma), x, y).values
    lin = raw_increment_grid(x, y).values
    np.testing.assert_allclose(rbf * sigma ** 2, lin, rtol=1e-4, atol=1e-7)


def test_rbf_shift_invariance():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(5, 3))
    y = rng.normal(size=(6, 3))
    shift = np.array([0.37, -1.2, 0.05])
    kernel = StaticKernel("rbf", bandwidth=0.6)
    base = lifted_increment_grid(kernel, x, y).values
    moved = lifted_increment_grid(kernel, x + shift, y + shift).values
    np.testing.assert_allclose(moved, base, atol=1e-14)


def test_grid_validation():
    rng = np.random.default_rng(6)
    with pytest.raises(InputError):
        raw_increment_grid(rng.normal(size=(1, 2)), rng.normal(size=(4, 2)))
    with pytest.raises(InputError):
        raw_increment_grid(rng.normal(size=(4, 2)), rng.normal(size=(4, 3)))


def test_accepts_time_series():
    rng = np.random.default_rng(7)
    x = TimeSeries(np.arange(4.0), rng.normal(size=(4, 2)))
    y = TimeSeries(np.arange(5.0), rng.normal(size=(5, 2)))
    grid = raw_increment_grid(x, y)
    np.testing.assert_array_equal(
        grid.values, raw_increment_grid(x.values, y.values).values)
