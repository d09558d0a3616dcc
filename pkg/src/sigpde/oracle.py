"""Brute-force truncated signatures and truncated signature kernels.

This module is the independent ground truth that the PDE solver is validated
against.  It optimizes for obviousness, not speed: level ``k`` of a signature
is stored as a dense array of ``dim**k`` coefficients in lexicographic
multi-index order, which is feasible only at small dimension and order.
A budget guard rejects anything bigger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeries
from .errors import InputError

__all__ = [
    "TruncatedTensor",
    "unit_tensor",
    "chen_product",
    "segment_exponential",
    "truncated_signature",
    "signature_inner",
    "truncated_kernel",
    "one_variation",
    "tail_bound",
    "COEFFICIENT_BUDGET",
]

# Largest dim**order coefficient count the oracle will allocate.
COEFFICIENT_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class TruncatedTensor:
    """A tensor-algebra element truncated at a finite order.

    Parameters
    ----------
    dim : int
        Ambient dimension d.
    order : int
        Truncation level N.
    levels : list of numpy.ndarray
        ``order + 1`` arrays; level k holds ``dim**k`` coefficients in
        lexicographic multi-index order (level 0 is the scalar part).
    """

    dim: int
    order: int
    levels: list

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dim must be positive")
        if self.order < 0:
            raise InputError("order must be nonnegative")
        if len(self.levels) != self.order + 1:
            raise InputError(
                f"expected {self.order + 1} levels, got {len(self.levels)}"
            )
        levels = []
        for k, lev in enumerate(self.levels):
            arr = np.ascontiguousarray(lev, dtype=np.float64).ravel()
            if arr.shape[0] != self.dim ** k:
                raise InputError(
                    f"level {k} must have {self.dim ** k} coefficients, "
                    f"got {arr.shape[0]}"
                )
            arr.setflags(write=False)
            levels.append(arr)
        object.__setattr__(self, "levels", levels)


def _check_budget(dim: int, order: int, budget: int) -> None:
    if dim ** order > budget:
        raise InputError(
            f"level {order} in dimension {dim} needs {dim ** order} coefficients, "
            f"over the budget of {budget}"
        )


def unit_tensor(dim: int, order: int) -> TruncatedTensor:
    """The multiplicative unit (1, 0, 0, ...) of the truncated tensor algebra.

    Parameters
    ----------
    dim : int
    order : int

    Returns
    -------
    TruncatedTensor
    """
    _check_budget(dim, order, COEFFICIENT_BUDGET)
    levels = [np.zeros(dim ** k) for k in range(order + 1)]
    levels[0][0] = 1.0
    return TruncatedTensor(dim, order, levels)


def chen_product(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product: level k of the result is sum of a_i (x) b_{k-i}.

    Parameters
    ----------
    a, b : TruncatedTensor
        Must share ``dim`` and ``order``.

    Returns
    -------
    TruncatedTensor

    Raises
    ------
    InputError
        On dimension or order mismatch.
    """
    if a.dim != b.dim or a.order != b.order:
        raise InputError(
            f"shape mismatch: ({a.dim}, {a.order}) vs ({b.dim}, {b.order})"
        )
    levels = []
    for k in range(a.order + 1):
        acc = np.zeros(a.dim ** k)
        for i in range(k + 1):
            acc += np.multiply.outer(a.levels[i], b.levels[k - i]).ravel()
        levels.append(acc)
    return TruncatedTensor(a.dim, a.order, levels)


def segment_exponential(increment, order: int) -> TruncatedTensor:
    """Signature of a single linear segment: level k is increment^(x)k / k!.

    Parameters
    ----------
    increment : array_like, shape (dim,)
        Total displacement of the segment.
    order : int

    Returns
    -------
    TruncatedTensor
    """
    inc = np.ascontiguousarray(increment, dtype=np.float64).ravel()
    if inc.shape[0] < 1:
        raise InputError("increment must have at least one channel")
    dim = inc.shape[0]
    _check_budget(dim, order, COEFFICIENT_BUDGET)
    levels = [np.ones(1)]
    cur = levels[0]
    for k in range(1, order + 1):
        cur = np.multiply.outer(cur, inc).ravel() / k
        levels.append(cur)
    return TruncatedTensor(dim, order, levels)


def _as_values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError("expected a TimeSeries or a samples x channels array")
    return arr


def truncated_signature(x, order: int, budget: int = COEFFICIENT_BUDGET) -> TruncatedTensor:
    """Truncated signature of the piecewise-linear path through the samples.

    Folds :func:`segment_exponential` over the segments with
    :func:`chen_product`.

    Parameters
    ----------
    x : TimeSeries or array_like, shape (length, dim)
        At least 2 samples.
    order : int
        Truncation level N.
    budget : int, optional
        Reject the computation if ``dim**order`` exceeds this.

    Returns
    -------
    TruncatedTensor
    """
    values = _as_values(x)
    if values.shape[0] < 2:
        raise InputError("truncated_signature needs at least 2 samples")
    dim = values.shape[1]
    _check_budget(dim, order, budget)
    sig = unit_tensor(dim, order)
    for i in range(values.shape[0] - 1):
        sig = chen_product(sig, segment_exponential(values[i + 1] - values[i], order))
    return sig


def signature_inner(a: TruncatedTensor, b: TruncatedTensor, level_scales=None) -> float:
    """Euclidean inner product of two truncated tensors, level by level.

    Parameters
    ----------
    a, b : TruncatedTensor
        Must share ``dim`` and ``order``.
    level_scales : array_like, optional
        Per-level weights; level k contributes ``level_scales[k] * <a_k, b_k>``.
        Default is all ones.

    Returns
    -------
    float
    """
    if a.dim != b.dim or a.order != b.order:
        raise InputError(
            f"shape mismatch: ({a.dim}, {a.order}) vs ({b.dim}, {b.order})"
        )
    if level_scales is None:
        scales = np.ones(a.order + 1)
    else:
        scales = np.ascontiguousarray(level_scales, dtype=np.float64).ravel()
        if scales.shape[0] != a.order + 1:
            raise InputError(
                f"level_scales must have {a.order + 1} entries, got {scales.shape[0]}"
            )
    total = 0.0
    for k in range(a.order + 1):
        total += scales[k] * float(a.levels[k] @ b.levels[k])
    return total


def truncated_kernel(x, y, order: int, level_scales=None) -> float:
    """Truncated signature kernel: sum over levels of <S(x)_k, S(y)_k>.

    Parameters
    ----------
    x, y : TimeSeries or array_like
        Paths with matching channel counts.
    order : int
    level_scales : array_like, optional
        See :func:`signature_inner`.

    Returns
    -------
    float
    """
    vx, vy = _as_values(x), _as_values(y)
    if vx.shape[1] != vy.shape[1]:
        raise InputError(
            f"channel mismatch: {vx.shape[1]} vs {vy.shape[1]}"
        )
    return signature_inner(
        truncated_signature(vx, order),
        truncated_signature(vy, order),
        level_scales=level_scales,
    )


def one_variation(x) -> float:
    """1-variation of the piecewise-linear path: sum of segment lengths.

    Parameters
    ----------
    x : TimeSeries or array_like

    Returns
    -------
    float
    """
    values = _as_values(x)
    if values.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(values, axis=0), axis=1)))


def tail_bound(x, y, order: int) -> float:
    """Upper bound on the truncation gap of the signature kernel.

    Bounds ``|k_untruncated - k_truncated(order)|`` by
    ``sum_{k > order} (Lx * Ly)**k / (k!)**2`` where ``Lx``, ``Ly`` are the
    1-variations of the two paths; terms are accumulated until they fall
    below machine epsilon relative to the running sum.

    Parameters
    ----------
    x, y : TimeSeries or array_like
    order : int

    Returns
    -------
    float
        Nonnegative bound; 0.0 for constant paths.
    """
    z = one_variation(x) * one_variation(y)
    if z == 0.0:
        return 0.0
    # term_k = z**k / (k!)**2 via the recurrence term_{k+1} = term_k * z/(k+1)**2
    term = 1.0
    for k in range(1, order + 2):
        term *= z / (k * k)
    total = 0.0
    k = order + 1
    eps = np.finfo(np.float64).eps
    while term > eps * (1.0 + total) and k < order + 100000:
        total += term
        k += 1
        term *= z / (k * k)
    return total
