"""Static kernels on the ambient space and increment-grid construction.

The increment grid is the coefficient field of the hyperbolic PDE solved in
:mod:`sigpde.solver`: entry (i, j) approximates the inner product of the i-th
increment of x with the j-th increment of y, either directly (raw / linear
kernel) or through the second difference of a static kernel evaluated on the
samples (the lifted construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries
from .errors import InputError

__all__ = [
    "StaticKernel",
    "IncrementGrid",
    "raw_increment_grid",
    "lifted_increment_grid",
]

_KINDS = ("linear", "rbf")


@dataclass(frozen=True)
class StaticKernel:
    """A kernel on the ambient sample space.

    Parameters
    ----------
    kind : {'linear', 'rbf'}
        ``linear`` is the dot product; ``rbf`` is
        ``exp(-||a - b||^2 / (2 * bandwidth**2))``.
    bandwidth : float, optional
        The rbf parameter sigma; required (and positive) for ``rbf``,
        ignored for ``linear``.
    """

    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InputError(
                f"unknown static kernel {self.kind!r}; choose from {_KINDS}"
            )
        if self.kind == "rbf":
            if self.bandwidth is None:
                raise InputError("rbf kernel needs a bandwidth (sigma)")
            if not (self.bandwidth > 0) or not np.isfinite(self.bandwidth):
                raise InputError("rbf bandwidth must be positive and finite")

    def evaluate(self, a, b) -> float:
        """Evaluate the kernel on a pair of vectors.

        Parameters
        ----------
        a, b : array_like, shape (d,)

        Returns
        -------
        float
        """
        a = np.ascontiguousarray(a, dtype=np.float64).ravel()
        b = np.ascontiguousarray(b, dtype=np.float64).ravel()
        if a.shape != b.shape:
            raise InputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
        if self.kind == "linear":
            return float(a @ b)
        diff = a - b
        return float(np.exp(-(diff @ diff) / (2.0 * self.bandwidth * self.bandwidth)))


@dataclass(frozen=True, eq=False)
class IncrementGrid:
    """Coefficient grid of the signature-kernel PDE.

    Parameters
    ----------
    values : numpy.ndarray, shape (m, n)
        Entry (i, j) is the (possibly lifted) increment inner product.
    max_abs : float
        Largest absolute entry, recorded so callers can check the bounded
        coefficient hypothesis behind the error estimate.
    """

    values: np.ndarray
    max_abs: float = field(default=0.0)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InputError("increment grid must be a nonempty 2-d matrix")
        if not np.all(np.isfinite(values)):
            raise InputError("increment grid entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "max_abs", float(np.max(np.abs(values))))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _series_values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError("expected a TimeSeries or a samples x channels array")
    return arr


def _check_pair(vx: np.ndarray, vy: np.ndarray) -> None:
    if vx.shape[0] < 2 or vy.shape[0] < 2:
        raise InputError("increment grids need at least 2 samples per series")
    if vx.shape[1] != vy.shape[1]:
        raise InputError(f"channel mismatch: {vx.shape[1]} vs {vy.shape[1]}")


def _linear_grid(vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    # Channel-by-channel outer products keep grid(x, y) and grid(y, x)
    # bitwise transposes of each other.
    dx = np.diff(vx, axis=0)
    dy = np.diff(vy, axis=0)
    grid = np.zeros((dx.shape[0], dy.shape[0]))
    for ch in range(dx.shape[1]):
        grid += np.multiply.outer(dx[:, ch], dy[:, ch])
    return grid


def raw_increment_grid(x, y) -> IncrementGrid:
    """Grid of plain increment inner products <x_{i+1}-x_i, y_{j+1}-y_j>.

    Parameters
    ----------
    x, y : TimeSeries or array_like
        At least 2 samples each, matching channel counts.

    Returns
    -------
    IncrementGrid
        Shape ``(x.length - 1, y.length - 1)``.
    """
    vx, vy = _series_values(x), _series_values(y)
    _check_pair(vx, vy)
    return IncrementGrid(_linear_grid(vx, vy))


def lifted_increment_grid(kernel: StaticKernel, x, y) -> IncrementGrid:
    """Increment grid induced by a static kernel via a second difference.

    Entry (i, j) is
    ``k(x_{i+1}, y_{j+1}) - k(x_i, y_{j+1}) - k(x_{i+1}, y_j) + k(x_i, y_j)``;
    with the linear kernel this collapses exactly to the raw increment grid.

    Parameters
    ----------
    kernel : StaticKernel
    x, y : TimeSeries or array_like

    Returns
    -------
    IncrementGrid
    """
    vx, vy = _series_values(x), _series_values(y)
    _check_pair(vx, vy)
    if kernel.kind == "linear":
        return IncrementGrid(_linear_grid(vx, vy))
    # Squared distances channel by channel so translating both series and
    # swapping the arguments stay exact to rounding.
    sq = np.zeros((vx.shape[0], vy.shape[0]))
    for ch in range(vx.shape[1]):
        diff = np.subtract.outer(vx[:, ch], vy[:, ch])
        sq += diff * diff
    m = np.exp(-sq / (2.0 * kernel.bandwidth * kernel.bandwidth))
    # Symmetric grouping keeps the transposition invariant bitwise.
    grid = (m[1:, 1:] + m[:-1, :-1]) - (m[:-1, 1:] + m[1:, :-1])
    return IncrementGrid(grid)
