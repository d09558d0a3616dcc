"""PDE solver: schemes, execution paths, analytic series, convergence."""

import math

import numpy as np
import pytest

from conftest import walk_pair
from sigpde import (
    InputError,
    NumericalError,
    StaticKernel,
    analytic_linear_kernel,
    convergence_study,
    insert_midpoints,
    signature_pde_kernel,
    solve_explicit,
    solve_implicit,
    truncated_kernel,
)

I0_2 = sum(1.0 / (math.factorial(k) ** 2) for k in range(40))  # I_0(2)
J0_2 = sum((-1.0) ** k / (math.factorial(k) ** 2) for k in range(40))  # J_0(2)


def test_zero_grid_gives_all_ones():
    for solver in (solve_explicit, solve_implicit):
        for lam in (0, 2):
            sol = solver(np.zeros((3, 4)), lam)
            np.testing.assert_array_equal(sol.grid, np.ones_like(sol.grid))
            assert sol.final == 1.0


def test_boundary_rows_are_exactly_one():
    rng = np.random.default_rng(0)
    grid = rng.normal(0, 0.5, (4, 6))
    for solver in (solve_explicit, solve_implicit):
        sol = solver(grid, 2)
        np.testing.assert_array_equal(sol.grid[0], np.ones(sol.grid.shape[1]))
        np.testing.assert_array_equal(sol.grid[:, 0], np.ones(sol.grid.shape[0]))
        assert sol.final == sol.grid[-1, -1]
        assert sol.grid.shape == (4 * 4 + 1, 4 * 6 + 1)


def test_single_cell_bessel_values():
    sol = solve_explicit(np.array([[1.0]]), 8)
    assert abs(sol.final - I0_2) <= 3e-5
    sol = solve_implicit(np.array([[1.0]]), 8)
    assert abs(sol.final - I0_2) <= 3e-5
    sol = solve_explicit(np.array([[-1.0]]), 8)
    assert abs(sol.final - J0_2) <= 3e-5


def test_all_execution_paths_bitwise_identical():
    rng = np.random.default_rng(1)
    grid = rng.normal(0, 0.4, (5, 7))
    for solver in (solve_explicit, solve_implicit):
        for lam in (0, 1, 3):
            seq = solver(grid, lam, mode="sequential")
            wav = solver(grid, lam, mode="wavefront")
            np.testing.assert_array_equal(seq.grid, wav.grid)
            seq_final = solver(grid, lam, mode="sequential", keep_grid=False)
            wav_final = solver(grid, lam, mode="wavefront", keep_grid=False)
            assert seq_final.final == seq.final
            assert wav_final.final == seq.final
            assert seq_final.grid is None and wav_final.grid is None


def test_refinement_budget():
    grid = np.ones((2, 2))
    with pytest.raises(InputError):
        solve_explicit(grid, 11)
    solve_explicit(grid, 11, max_refinement=11, keep_grid=False)
    with pytest.raises(InputError):
        solve_explicit(grid, -1)


def test_non_finite_increments_rejected():
    with pytest.raises(InputError):
        solve_explicit(np.array([[np.inf]]), 2)


def test_implicit_singular_cell_named():
    grid = np.array([[0.5, 4.0], [0.5, 0.5]])  # 4/4 == 1 at cell (0, 1), lam=0
    with pytest.raises(NumericalError, match=r"\(0, 1\)"):
        solve_implicit(grid, 0)
    # the same grid is fine once refined: 4/4 * 1/4 != 1
    solve_implicit(grid, 1, keep_grid=False)


def test_kernel_constant_path_is_one():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(6, 2))
    const = np.ones((5, 2))
    assert signature_pde_kernel(x, const, lam=4) == 1.0


def test_kernel_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(5):
        x, y = walk_pair(rng, 8, 2, 0.5)
        a = signature_pde_kernel(x, y, lam=3)
        b = signature_pde_kernel(y, x, lam=3)
        assert abs(a - b) <= 1e-14 * max(abs(a), abs(b))


def test_kernel_matches_oracle():
    rng = np.random.default_rng(4)
    for _ in range(10):
        x, y = walk_pair(rng, 8, 2, 0.1)
        pde = signature_pde_kernel(x, y, lam=3)
        oracle = truncated_kernel(x, y, 12)
        assert abs(pde - oracle) <= 1e-4


def test_kernel_accepts_static_kernels_and_rejects_junk():
    rng = np.random.default_rng(5)
    x, y = walk_pair(rng, 6, 2, 0.3)
    raw = signature_pde_kernel(x, y, kernel="raw", lam=2)
    lin = signature_pde_kernel(x, y, kernel=StaticKernel("linear"), lam=2)
    assert raw == lin
    rbf = signature_pde_kernel(x, y, kernel=StaticKernel("rbf", bandwidth=0.5), lam=2)
    assert rbf != raw
    with pytest.raises(InputError):
        signature_pde_kernel(x, y, kernel="dtw", lam=2)


def test_kernel_rescale_option():
    rng = np.random.default_rng(6)
    x, y = walk_pair(rng, 6, 2, 0.4)
    big_x = x.values * 50.0
    big_y = y.values * 50.0
    scaled = signature_pde_kernel(big_x, big_y, lam=3, rescale=True)
    manual = signature_pde_kernel(big_x / np.max(np.abs(big_x)),
                                  big_y / np.max(np.abs(big_y)), lam=3)
    assert scaled == manual


def test_kernel_midpoint_invariance():
    rng = np.random.default_rng(7)
    x, y = walk_pair(rng, 7, 2, 0.1)
    base = signature_pde_kernel(x, y, lam=4)
    refined = signature_pde_kernel(insert_midpoints(x), insert_midpoints(y), lam=4)
    assert abs(refined - base) <= 1e-6 * abs(base)


def test_analytic_series_values():
    assert analytic_linear_kernel(0.0) == 1.0
    assert analytic_linear_kernel(1.0) == pytest.approx(I0_2, rel=1e-15)
    assert analytic_linear_kernel(-1.0) == pytest.approx(J0_2, rel=1e-14)
    # frozen reference digits
    assert analytic_linear_kernel(1.0) == pytest.approx(2.2795853023360673, rel=1e-15)
    assert analytic_linear_kernel(-1.0) == pytest.approx(0.22389077914123562, rel=1e-13)
    assert analytic_linear_kernel(4.0) == pytest.approx(11.301921952136330, rel=1e-14)
    with pytest.raises(InputError):
        analytic_linear_kernel(np.nan)


def test_analytic_series_against_scipy():
    # independent implementation check, test-only dependency
    from scipy.special import iv, jv

    for z in (0.25, 1.0, 4.0, 9.0):
        assert analytic_linear_kernel(z) == pytest.approx(
            float(iv(0, 2.0 * np.sqrt(z))), rel=1e-13)
    for z in (-0.25, -1.0, -4.0):
        assert analytic_linear_kernel(z) == pytest.approx(
            float(jv(0, 2.0 * np.sqrt(-z))), abs=1e-14)


def test_convergence_study_zero_grid():
    x = np.ones((4, 2))
    y = np.ones((3, 2))
    rows = convergence_study(x, y, lambda_max=2)
    assert [lam for lam, _ in rows] == [0, 1, 2]
    assert all(err == 0.0 for _, err in rows)


def test_convergence_study_analytic_single_cell():
    seg = np.array([[0.0], [1.0]])
    rows = convergence_study(seg, seg, lambda_max=6, reference="analytic")
    errors = [err for _, err in rows]
    # monotone refinement and order-2 decay toward the series value
    assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
    for lam, err in rows:
        sol = solve_explicit(np.array([[1.0]]), lam, keep_grid=False)
        assert err == pytest.approx(abs(sol.final - analytic_linear_kernel(1.0)),
                                    abs=1e-12)
    with pytest.raises(InputError):
        convergence_study(np.zeros((3, 1)), np.zeros((3, 1)), reference="analytic")


def test_convergence_study_order_two():
    rng = np.random.default_rng(8)
    x, y = walk_pair(rng, 6, 2, 0.2)
    rows = convergence_study(x, y, lambda_max=3)
    errors = np.array([err for _, err in rows])
    ratios = errors[:-1] / errors[1:]
    assert np.all(ratios > 2.8) and np.all(ratios < 5.5)


def test_convergence_study_cross_scheme_reference():
    rng = np.random.default_rng(9)
    x, y = walk_pair(rng, 5, 2, 0.2)
    rows = convergence_study(x, y, lambda_max=2, reference_scheme="implicit")
    assert all(np.isfinite(err) for _, err in rows)
    with pytest.raises(InputError):
        convergence_study(x, y, lambda_max=0)
