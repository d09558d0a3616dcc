"""Measure reduction: sparse reweighting of a path ensemble in kernel space.

Given an ensemble carrying weights alpha, find sparse weights beta so the two
weighted empirical measures are close in the kernel metric:
minimize ``L(beta) = (alpha - beta)^T K (alpha - beta) + penalty * ||beta||_1``
by proximal gradient descent with soft-thresholding.  The Gram matrix K is
the expensive part and is computed once, upstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries, scale
from .errors import InputError, NumericalError
from .gram import gram

__all__ = [
    "WeightedEnsemble",
    "ReductionResult",
    "reduction_loss",
    "reduction_gradient",
    "soft_threshold",
    "default_step",
    "proximal_reduce",
    "penalty_for_support",
    "reduce_ensemble",
    "as_probability",
    "SUPPORT_TOL",
]

# |beta_i| above this counts as a support point.
SUPPORT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """A weighted collection of paths representing a discrete measure.

    Parameters
    ----------
    paths : sequence of TimeSeries
    alpha : array_like, shape (len(paths),)
        Nonnegative weights summing to 1 (within 1e-9).
    """

    paths: list
    alpha: np.ndarray

    def __post_init__(self):
        paths = list(self.paths)
        if not paths:
            raise InputError("an ensemble needs at least one path")
        alpha = np.ascontiguousarray(self.alpha, dtype=np.float64).ravel()
        if alpha.shape[0] != len(paths):
            raise InputError(
                f"{len(paths)} paths but {alpha.shape[0]} weights"
            )
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            raise InputError("weights must be nonnegative and finite")
        if abs(float(alpha.sum()) - 1.0) > 1e-9:
            raise InputError(f"weights must sum to 1, got {float(alpha.sum())!r}")
        alpha.setflags(write=False)
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def uniform(cls, paths) -> "WeightedEnsemble":
        """Ensemble with equal weights 1/N on each path."""
        paths = list(paths)
        if not paths:
            raise InputError("an ensemble needs at least one path")
        return cls(paths, np.full(len(paths), 1.0 / len(paths)))

    @property
    def size(self) -> int:
        return len(self.paths)


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """Outcome of a proximal-gradient reduction run.

    Parameters
    ----------
    beta : numpy.ndarray
        Final weights (may contain negatives; see :func:`as_probability`).
    loss_history : numpy.ndarray
        Penalized objective per iteration, non-increasing.
    support : numpy.ndarray
        Indices with ``|beta_i| > support_tol``.
    penalty : float
    step : float
        Final step size after any backtracking.
    iterations : int
    converged : bool
        Whether the iterate displacement fell below tol before max_iter.
    fixed_point_residual : float
        ``||beta - prox(beta - step * grad)||`` at the final iterate.
    support_tol : float
    """

    beta: np.ndarray
    loss_history: np.ndarray
    support: np.ndarray
    penalty: float
    step: float
    iterations: int
    converged: bool
    fixed_point_residual: float
    support_tol: float = field(default=SUPPORT_TOL)


def _weights(ensemble) -> np.ndarray:
    if isinstance(ensemble, WeightedEnsemble):
        return ensemble.alpha
    alpha = np.ascontiguousarray(ensemble, dtype=np.float64).ravel()
    return alpha


def _square_gram(k, n: int) -> np.ndarray:
    from .gram import GramMatrix

    mat = k.values if isinstance(k, GramMatrix) else np.ascontiguousarray(k, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"K must be square, got {mat.shape}")
    if mat.shape[0] != n:
        raise InputError(f"K is {mat.shape[0]}x{mat.shape[0]} but there are {n} weights")
    return mat


def reduction_loss(k, alpha, beta) -> float:
    """Squared kernel distance between the alpha- and beta-weighted measures.

    Parameters
    ----------
    k : GramMatrix or array_like, shape (n, n)
    alpha, beta : array_like, shape (n,)

    Returns
    -------
    float
        ``r^T K r`` with ``r = alpha - beta``.
    """
    alpha = _weights(alpha)
    beta = np.ascontiguousarray(beta, dtype=np.float64).ravel()
    if beta.shape != alpha.shape:
        raise InputError(f"alpha has shape {alpha.shape}, beta {beta.shape}")
    mat = _square_gram(k, alpha.shape[0])
    r = alpha - beta
    return float(r @ mat @ r)


def reduction_gradient(k, alpha, beta) -> np.ndarray:
    """Gradient of :func:`reduction_loss` in beta: ``-2 K (alpha - beta)``.

    Parameters
    ----------
    k : GramMatrix or array_like, shape (n, n)
    alpha, beta : array_like, shape (n,)

    Returns
    -------
    numpy.ndarray, shape (n,)
    """
    alpha = _weights(alpha)
    beta = np.ascontiguousarray(beta, dtype=np.float64).ravel()
    if beta.shape != alpha.shape:
        raise InputError(f"alpha has shape {alpha.shape}, beta {beta.shape}")
    mat = _square_gram(k, alpha.shape[0])
    return -2.0 * (mat @ (alpha - beta))


def soft_threshold(v, gamma: float) -> np.ndarray:
    """Componentwise shrink toward zero by gamma, clipping at zero.

    Parameters
    ----------
    v : array_like
    gamma : float
        Nonnegative threshold.

    Returns
    -------
    numpy.ndarray
        ``sign(v) * max(|v| - gamma, 0)``.
    """
    if gamma < 0:
        raise InputError("gamma must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - gamma, 0.0)


def default_step(k) -> float:
    """Step size 0.9 / (2 * lambda_max(K)), safely inside the stable range.

    Parameters
    ----------
    k : GramMatrix or array_like, shape (n, n)

    Returns
    -------
    float
    """
    from .gram import GramMatrix

    mat = k.values if isinstance(k, GramMatrix) else np.ascontiguousarray(k, dtype=np.float64)
    lam_max = float(np.linalg.eigvalsh(mat)[-1])
    if not np.isfinite(lam_max) or lam_max <= 0:
        return 1.0
    return 0.9 / (2.0 * lam_max)


def proximal_reduce(ensemble, k, penalty: float, step: float | None = None,
                    max_iter: int = 10000, tol: float = 1e-10, *,
                    beta0=None, support_tol: float = SUPPORT_TOL) -> ReductionResult:
    """Minimize the penalized kernel distance by proximal gradient descent.

    Iterates ``beta <- soft_threshold(beta - step * grad, step * penalty)``
    from ``beta0`` (default: alpha), halving the step whenever the penalized
    objective would increase or turn non-finite, and stopping once the
    iterate moves by at most ``tol``.

    Parameters
    ----------
    ensemble : WeightedEnsemble or array_like
        The ensemble (or just its weight vector alpha).
    k : GramMatrix or array_like, shape (n, n)
        Self-Gram of the ensemble paths.
    penalty : float
        Nonnegative l1 penalty strength.
    step : float, optional
        Initial step size; default :func:`default_step`.
    max_iter : int, optional
    tol : float, optional
    beta0 : array_like, optional
        Starting point; default alpha.
    support_tol : float, optional

    Returns
    -------
    ReductionResult

    Raises
    ------
    NumericalError
        If the objective turns non-finite and backtracking cannot recover,
        naming the iteration.
    """
    alpha = _weights(ensemble)
    n = alpha.shape[0]
    mat = _square_gram(k, n)
    if penalty < 0:
        raise InputError("penalty must be nonnegative")
    if step is None:
        step = default_step(mat)
    if not (step > 0) or not np.isfinite(step):
        raise InputError("step must be positive and finite")
    if tol <= 0:
        raise InputError("tol must be positive")

    def objective(b):
        r = alpha - b
        return float(r @ mat @ r) + penalty * float(np.abs(b).sum())

    beta = alpha.copy() if beta0 is None else np.ascontiguousarray(beta0, dtype=np.float64).ravel()
    if beta.shape != alpha.shape:
        raise InputError(f"beta0 has shape {beta.shape}, expected {alpha.shape}")
    current = objective(beta)
    if not np.isfinite(current):
        raise NumericalError("non-finite objective at iteration 0")
    history = [current]
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        grad = -2.0 * (mat @ (alpha - beta))
        candidate = soft_threshold(beta - step * grad, step * penalty)
        value = objective(candidate)
        halvings = 0
        while not np.isfinite(value) or value > current:
            step *= 0.5
            halvings += 1
            if halvings > 200 or step < 1e-300:
                if not np.isfinite(value):
                    raise NumericalError(f"non-finite objective at iteration {it}")
                # Objective cannot decrease along the prox path: we are at
                # a numerical fixed point.
                candidate = beta
                value = current
                break
            candidate = soft_threshold(beta - step * grad, step * penalty)
            value = objective(candidate)
        delta = float(np.linalg.norm(candidate - beta))
        beta = candidate
        current = value
        history.append(current)
        if delta <= tol:
            converged = True
            break

    grad = -2.0 * (mat @ (alpha - beta))
    residual = float(np.linalg.norm(
        beta - soft_threshold(beta - step * grad, step * penalty)
    ))
    support = np.flatnonzero(np.abs(beta) > support_tol)
    return ReductionResult(
        beta=beta, loss_history=np.array(history), support=support,
        penalty=float(penalty), step=float(step), iterations=iterations,
        converged=converged, fixed_point_residual=residual,
        support_tol=float(support_tol),
    )


def penalty_for_support(ensemble, k, size: int, *, step: float | None = None,
                        max_iter: int = 10000, tol: float = 1e-10,
                        support_tol: float = SUPPORT_TOL,
                        bisect_iters: int = 80) -> tuple[float, ReductionResult]:
    """Bisect the l1 penalty until the reduced support has the given size.

    The support size decreases (weakly) as the penalty grows: penalty 0
    keeps every weighted path, while any penalty above ``2 * max|K alpha|``
    empties the support.  Bisection between those ends stops at the first
    penalty whose run hits the requested size exactly.

    Parameters
    ----------
    ensemble : WeightedEnsemble or array_like
    k : GramMatrix or array_like, shape (n, n)
    size : int
        Requested support size, between 1 and n.
    step, max_iter, tol, support_tol : optional
        Passed through to :func:`proximal_reduce`.
    bisect_iters : int, optional

    Returns
    -------
    (float, ReductionResult)
        The penalty found and its reduction run.

    Raises
    ------
    NumericalError
        If no bisection iterate hits the size exactly; reports the nearest
        sizes seen.
    """
    alpha = _weights(ensemble)
    n = alpha.shape[0]
    mat = _square_gram(k, n)
    if not 1 <= size <= n:
        raise InputError(f"support size must be in [1, {n}], got {size}")
    if step is None:
        step = default_step(mat)

    def run(penalty):
        return proximal_reduce(alpha, mat, penalty, step=step, max_iter=max_iter,
                               tol=tol, support_tol=support_tol)

    lo, hi = 0.0, 2.0 * float(np.max(np.abs(mat @ alpha))) * 1.0000001
    nearest = None
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        result = run(mid)
        got = int(result.support.shape[0])
        if nearest is None or abs(got - size) < nearest[0]:
            nearest = (abs(got - size), got, mid)
        if got == size:
            return mid, result
        if got > size:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"no penalty with support size {size} found in {bisect_iters} bisection "
        f"steps; nearest size was {nearest[1]} at penalty {nearest[2]:.6g}"
    )


def as_probability(beta) -> np.ndarray:
    """Clamp negatives to zero and renormalize to a probability vector.

    Parameters
    ----------
    beta : array_like

    Returns
    -------
    numpy.ndarray
        Nonnegative weights summing to 1.

    Raises
    ------
    NumericalError
        If no positive mass remains after clamping.
    """
    beta = np.ascontiguousarray(beta, dtype=np.float64).ravel()
    clipped = np.maximum(beta, 0.0)
    total = float(clipped.sum())
    if total <= 0:
        raise NumericalError("no positive mass left after clamping")
    return clipped / total


def reduce_ensemble(ensemble, *, penalty: float | None = None,
                    support_size: int | None = None, kernel=None, lam: int = 3,
                    scheme: str = "explicit", rescale: bool = False,
                    threads: int = 1, step: float | None = None,
                    max_iter: int = 10000, tol: float = 1e-10,
                    support_tol: float = SUPPORT_TOL):
    """Build the ensemble's Gram matrix and reduce it in one call.

    Exactly one of ``penalty`` and ``support_size`` must be given; the
    latter bisects the penalty via :func:`penalty_for_support`.

    Parameters
    ----------
    ensemble : WeightedEnsemble or sequence of TimeSeries
        A bare sequence gets uniform weights.
    penalty : float, optional
    support_size : int, optional
    kernel, lam, scheme, threads : optional
        Gram-build options, as in :func:`sigpde.gram.gram`.
    rescale : bool, optional
        Scale the whole ensemble by one common factor so the largest
        absolute entry is 1 (per-series rescaling would distort the
        relative amplitudes the reduction is meant to preserve).
    step, max_iter, tol, support_tol : optional
        Reduction options, as in :func:`proximal_reduce`.

    Returns
    -------
    ReductionResult
    """
    if (penalty is None) == (support_size is None):
        raise InputError("give exactly one of penalty and support_size")
    if not isinstance(ensemble, WeightedEnsemble):
        ensemble = WeightedEnsemble.uniform(ensemble)
    paths = ensemble.paths
    if rescale:
        gmax = max(
            (float(np.max(np.abs(p.values))) if isinstance(p, TimeSeries)
             else float(np.max(np.abs(p)))) for p in paths
        )
        if gmax > 1e-300:
            paths = [
                scale(p, 1.0 / gmax) if isinstance(p, TimeSeries) else p / gmax
                for p in paths
            ]
    k = gram(paths, kernel=kernel, lam=lam, scheme=scheme, rescale=False,
             threads=threads)
    if penalty is not None:
        return proximal_reduce(ensemble.alpha, k, penalty, step=step,
                               max_iter=max_iter, tol=tol, support_tol=support_tol)
    _, result = penalty_for_support(ensemble.alpha, k, support_size, step=step,
                                    max_iter=max_iter, tol=tol,
                                    support_tol=support_tol)
    return result
