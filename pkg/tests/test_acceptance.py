"""Whole-library acceptance suite.

Each test covers one externally visible guarantee and prints a single
PASS line with the measured numbers (run with ``-s`` to see them all).
Known-unreachable tolerances are marked strict xfail with the measured
shortfall in the reason.
"""

import time

import numpy as np
import pytest

from conftest import walk_pair
from sigpde import (
    StaticKernel,
    analytic_linear_kernel,
    convergence_study,
    gram,
    insert_midpoints,
    mmd_squared,
    penalty_for_support,
    proximal_reduce,
    raw_increment_grid,
    reduction_gradient,
    reduction_loss,
    sample_fbm,
    scale,
    signature_pde_kernel,
    solve_explicit,
    solve_implicit,
    tail_bound,
    time_augment,
    truncated_kernel,
)


@pytest.fixture(scope="module")
def oracle_pairs():
    # 100 pairs, lengths 4..10, 1..3 channels, entries inside [-1, 1]
    pairs = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        length = int(rng.integers(4, 11))
        dim = int(rng.integers(1, 4))
        pairs.append(walk_pair(rng, length, dim, 0.1))
    return pairs


@pytest.fixture(scope="module")
def brownian_pairs():
    return [walk_pair(np.random.default_rng(200 + i), 10, 2, 0.2) for i in range(20)]


def test_agrees_with_truncated_signature_oracle(oracle_pairs):
    t0 = time.perf_counter()
    worst = -np.inf
    for x, y in oracle_pairs:
        pde = signature_pde_kernel(x, y, lam=3)
        oracle = truncated_kernel(x, y, 12)
        margin = abs(pde - oracle) - tail_bound(x, y, 12)
        worst = max(worst, margin)
        assert margin <= 1e-4
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"PASS truncated-signature oracle: worst |pde-truncated|-tail "
          f"{worst:.3g} <= 1e-4 on 100 pairs in {elapsed:.1f}s")


def test_matches_bessel_series_on_single_cells():
    t0 = time.perf_counter()
    worst = 0.0
    for z in (-1.0, 0.25, 1.0):
        value = solve_explicit(np.array([[z]]), 8).final
        err = abs(value - analytic_linear_kernel(z))
        worst = max(worst, err)
        assert err <= 3e-5
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"PASS analytic series oracle: max |error| {worst:.3g} <= 3e-5 "
          f"for single cells z in {{-1, 0.25, 1}} in {elapsed:.2f}s")


@pytest.mark.xfail(
    strict=True,
    reason="single cell with increment 4 at level 8: measured absolute error "
    "2.299e-4 > 3e-5 (relative error 2.03e-5 would meet it; the error scales "
    "as 4^-level, so the absolute target needs level >= 10). The implicit "
    "scheme measures 6.79e-5 and also misses.",
)
def test_bessel_single_cell_large_increment_absolute_tolerance():
    value = solve_explicit(np.array([[4.0]]), 8).final
    assert abs(value - analytic_linear_kernel(4.0)) <= 3e-5


def test_refinement_halves_error_at_second_order(brownian_pairs):
    t0 = time.perf_counter()
    slopes, ratios = [], []
    for x, y in brownian_pairs:
        errs = np.array([e for _, e in convergence_study(x, y, lambda_max=3)])
        slope = np.polyfit(np.arange(4), np.log2(errs), 1)[0]
        slopes.append(slope)
        ratios.append(errs[0] / errs[1])
        assert -2.4 <= slope <= -1.6
        assert 2.8 <= errs[0] / errs[1] <= 5.5
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"PASS refinement order: slopes [{min(slopes):.2f}, {max(slopes):.2f}] "
          f"in [-2.4, -1.6], level-0/1 ratios [{min(ratios):.2f}, {max(ratios):.2f}] "
          f"in [2.8, 5.5] on 20 pairs in {elapsed:.1f}s")


def test_explicit_and_implicit_schemes_agree(brownian_pairs):
    worst = 0.0
    for x, y in brownian_pairs:
        e = signature_pde_kernel(x, y, lam=6, scheme="explicit")
        i = signature_pde_kernel(x, y, lam=6, scheme="implicit")
        rel = abs(e - i) / abs(e)
        worst = max(worst, rel)
        assert rel <= 1e-6
    print(f"PASS scheme cross-check: max relative gap {worst:.3g} <= 1e-6 "
          f"at level 6 on 20 pairs")


def test_thread_count_and_traversal_do_not_change_bits(brownian_pairs):
    paths = [x for x, _ in brownian_pairs]
    serial = gram(paths, lam=2, threads=1)
    parallel = gram(paths, lam=2, threads=8)
    np.testing.assert_array_equal(serial.values, parallel.values)

    c = raw_increment_grid(*brownian_pairs[0])
    for solve in (solve_explicit, solve_implicit):
        seq = solve(c, 3, mode="sequential")
        wave = solve(c, 3, mode="wavefront")
        np.testing.assert_array_equal(seq.grid, wave.grid)
        assert seq.final == wave.final
        assert solve(c, 3, mode="sequential", keep_grid=False).final == seq.final
        assert solve(c, 3, mode="wavefront", keep_grid=False).final == seq.final
    print("PASS determinism: 1-worker and 8-worker Grams bitwise identical; "
          "sequential and wavefront sweeps bitwise identical for both schemes")


def test_self_gram_matrices_are_positive_semidefinite():
    # the discrete solution breaks exact PSD by O(4^-level), so this needs a
    # resolved level: amp 0.05 / level 5 measures -5.7e-10, level 2 -4.9e-5
    worst = np.inf
    for i in range(20):
        rng = np.random.default_rng(600 + i)
        size = int(rng.integers(5, 21))
        dim = int(rng.integers(1, 4))
        paths = [walk_pair(rng, int(rng.integers(4, 11)), dim, 0.05)[0]
                 for _ in range(size)]
        k = gram(paths, lam=5).values
        floor = np.linalg.eigvalsh(k)[0] / np.trace(k)
        worst = min(worst, floor)
        assert floor >= -1e-8
    print(f"PASS positive semidefiniteness: min eigenvalue/trace {worst:.3g} "
          f">= -1e-8 over 20 self-Grams of sizes 5-20")


def test_kernel_invariant_under_midpoint_refinement(oracle_pairs):
    worst = 0.0
    for x, y in oracle_pairs:
        base = signature_pde_kernel(x, y, lam=4)
        refined = signature_pde_kernel(insert_midpoints(x), insert_midpoints(y), lam=4)
        rel = abs(refined - base) / abs(base)
        worst = max(worst, rel)
        assert rel <= 1e-6
    print(f"PASS reparametrization invariance: max relative change {worst:.3g} "
          f"<= 1e-6 under midpoint insertion on 100 pairs")


def test_reduction_gradient_prox_and_fixed_points():
    # (a) gradient against central finite differences
    worst_fd = 0.0
    for n in (3, 8, 12):
        rng = np.random.default_rng(n)
        a = rng.normal(size=(n, n))
        k = a @ a.T + 0.1 * np.eye(n)
        alpha = np.full(n, 1.0 / n)
        beta = rng.normal(size=n)
        grad = reduction_gradient(k, alpha, beta)
        h = 1e-6
        for idx in range(n):
            up, dn = beta.copy(), beta.copy()
            up[idx] += h
            dn[idx] -= h
            fd = (reduction_loss(k, alpha, up) - reduction_loss(k, alpha, dn)) / (2 * h)
            rel = abs(grad[idx] - fd) / max(abs(fd), 1e-12)
            worst_fd = max(worst_fd, rel)
            assert rel <= 1e-5

    # (b) zero penalty drives the loss to zero
    rng = np.random.default_rng(99)
    a = rng.normal(size=(9, 9))
    k = a @ a.T + 0.1 * np.eye(9)
    alpha = np.full(9, 1.0 / 9)
    res0 = proximal_reduce(alpha, k, penalty=0.0, beta0=np.zeros(9))
    loss0 = reduction_loss(k, alpha, res0.beta)
    assert loss0 <= 1e-8

    # (c) fixed-point residual at convergence
    tol = 1e-10
    res = proximal_reduce(alpha, k, penalty=0.05, tol=tol)
    assert res.converged and res.fixed_point_residual <= 10 * tol

    # (d) scalar closed form max(a - penalty/(2 k11), 0)
    worst_scalar = 0.0
    for k11, a1, pen in ((2.0, 1.0, 1.0), (0.5, 0.8, 0.3), (3.0, 0.2, 2.0)):
        got = proximal_reduce(np.array([a1]), np.array([[k11]]), pen, tol=1e-12).beta[0]
        gap = abs(got - max(a1 - pen / (2.0 * k11), 0.0))
        worst_scalar = max(worst_scalar, gap)
        assert gap <= 1e-6
    print(f"PASS reduction mathematics: gradient vs finite differences {worst_fd:.3g} "
          f"<= 1e-5; zero-penalty loss {loss0:.3g} <= 1e-8; fixed-point residual "
          f"{res.fixed_point_residual:.3g} <= 10*tol; scalar gap {worst_scalar:.3g} "
          f"<= 1e-6")


def test_penalty_bisection_recovers_mixed_roughness_support():
    t0 = time.perf_counter()
    sized = balanced = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        raw = []
        for hurst in (0.2, 0.5, 0.8):
            raw += sample_fbm(hurst, 30, count=10, seed=rng)
        gmax = max(float(np.max(np.abs(p.values))) for p in raw)
        paths = [time_augment(scale(p, 0.4 / gmax)) for p in raw]
        k = gram(paths, lam=2)
        _, res = penalty_for_support(np.full(30, 1.0 / 30), k, 6, max_iter=4000)
        sized += 1
        groups = {int(i) // 10 for i in res.support}
        balanced += groups == {0, 1, 2}
    elapsed = time.perf_counter() - t0
    assert sized == 10
    assert balanced >= 8
    assert elapsed < 300.0
    print(f"PASS mixed-roughness reduction: support size 6 reached {sized}/10, "
          f"all three Hurst groups kept {balanced}/10 (need >= 8) in {elapsed:.0f}s")


def test_mmd_separates_roughness_and_matches_oracle():
    rng = np.random.default_rng(7)
    xs = [walk_pair(rng, 8, 2, 0.4)[0] for _ in range(5)]
    ys = [walk_pair(rng, 8, 2, 0.4)[0] for _ in range(5)]

    self_mmd = mmd_squared(xs, xs, variant="biased", lam=2)
    assert abs(self_mmd) <= 1e-12

    unbiased = mmd_squared(xs, ys, variant="unbiased", lam=2)
    kxx = gram(xs, lam=2).values
    kyy = gram(ys, lam=2).values
    kxy = gram(xs, ys, lam=2).values
    m, n = len(xs), len(ys)
    oracle = ((kxx.sum() - np.trace(kxx)) / (m * (m - 1))
              + (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
              - 2.0 * kxy.mean())
    assert abs(unbiased - oracle) <= 1e-12

    t0 = time.perf_counter()
    rbf = StaticKernel("rbf", bandwidth=0.2)
    wins = 0
    gaps = []
    for i in range(10):
        seed_rng = np.random.default_rng(1000 + i)
        rough = sample_fbm(0.2, 30, count=10, seed=seed_rng)
        smooth = sample_fbm(0.8, 30, count=10, seed=seed_rng)
        rough2 = sample_fbm(0.2, 30, count=10, seed=seed_rng)
        gmax = max(float(np.max(np.abs(p.values))) for p in rough + smooth + rough2)
        a, b, c = ([time_augment(scale(p, 1.0 / gmax)) for p in grp]
                   for grp in (rough, smooth, rough2))
        cross = mmd_squared(a, b, variant="unbiased", kernel=rbf, lam=2)
        same = mmd_squared(a, c, variant="unbiased", kernel=rbf, lam=2)
        wins += cross > same
        gaps.append(cross - same)
    elapsed = time.perf_counter() - t0
    assert wins == 10
    print(f"PASS distribution distance: biased self-distance {self_mmd:.3g} <= 1e-12; "
          f"unbiased matches double-count oracle within 1e-12; rough-vs-smooth "
          f"exceeds rough-vs-rough 10/10 (min gap {min(gaps):.3g}) in {elapsed:.0f}s")
