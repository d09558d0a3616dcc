"""Gram matrices over path collections, MMD estimators, and kernel ridge regression.

Pairs are independent, so the Gram build parallelizes across them with a
thread pool; each entry is written exactly once, making the result identical
for any worker count.  MMD and ridge regression operate on the small dense
matrices that come out.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InputError, NumericalError, SigPdeError
from .solver import signature_pde_kernel
from .static_kernels import StaticKernel

__all__ = [
    "GramMatrix",
    "gram",
    "mmd_squared",
    "krr_fit",
    "krr_predict",
    "write_gram_csv",
    "read_gram_csv",
]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """A dense kernel matrix with its provenance.

    Parameters
    ----------
    values : numpy.ndarray, shape (rows, cols)
    config : dict
        Provenance record: static kernel, refinement level, scheme, and
        rescale flag that produced the entries.
    """

    values: np.ndarray
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InputError("a Gram matrix must be a nonempty 2-d matrix")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _provenance(kernel, lam, scheme, rescale) -> dict:
    record = {"static_kernel": "linear", "lambda": int(lam), "scheme": scheme,
              "rescale": bool(rescale)}
    if isinstance(kernel, StaticKernel):
        record["static_kernel"] = kernel.kind
        if kernel.kind == "rbf":
            record["sigma"] = float(kernel.bandwidth)
    return record


def _resolve_threads(threads: int) -> int:
    import os

    if threads < 0:
        raise InputError("threads must be nonnegative (0 = auto)")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def gram(xs, ys=None, *, kernel=None, lam: int = 3, scheme: str = "explicit",
         rescale: bool = False, threads: int = 1, mode: str = "auto") -> GramMatrix:
    """Gram matrix of signature-kernel values between two path collections.

    Parameters
    ----------
    xs : sequence of TimeSeries
    ys : sequence of TimeSeries, optional
        When omitted, the self-Gram of ``xs`` is built: only the upper
        triangle is solved and the matrix is mirrored, so it is symmetric
        exactly.
    kernel : StaticKernel, 'raw', or None, optional
    lam : int, optional
    scheme : {'explicit', 'implicit'}, optional
    rescale : bool, optional
        Rescale each series to maximum absolute entry 1 before solving.
    threads : int, optional
        Worker count for the pair loop; 0 picks the CPU count.  The result
        is identical for every choice.
    mode : {'auto', 'sequential', 'wavefront'}, optional
        Per-pair solver execution path.

    Returns
    -------
    GramMatrix

    Raises
    ------
    InputError
        On empty or dimension-mismatched collections.
    SigPdeError
        A failing pair aborts the build; the message names the pair.
    """
    xs = list(xs)
    if not xs:
        raise InputError("empty collection")
    symmetric = ys is None
    ys_list = xs if symmetric else list(ys)
    if not ys_list:
        raise InputError("empty collection")

    values = np.zeros((len(xs), len(ys_list)))
    if symmetric:
        pairs = [(i, j) for i in range(len(xs)) for j in range(i, len(xs))]
    else:
        pairs = [(i, j) for i in range(len(xs)) for j in range(len(ys_list))]

    def entry(pair):
        i, j = pair
        try:
            return signature_pde_kernel(xs[i], ys_list[j], kernel=kernel, lam=lam,
                                        scheme=scheme, rescale=rescale, mode=mode)
        except SigPdeError as exc:
            raise type(exc)(f"pair ({i}, {j}): {exc}") from exc

    workers = _resolve_threads(threads)
    if workers == 1:
        results = [entry(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(entry, pairs))
    for (i, j), val in zip(pairs, results):
        values[i, j] = val
        if symmetric:
            values[j, i] = val

    return GramMatrix(values, _provenance(kernel, lam, scheme, rescale))


def _as_matrix(g) -> np.ndarray:
    if isinstance(g, GramMatrix):
        return g.values
    arr = np.ascontiguousarray(g, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError("expected a GramMatrix or a 2-d array")
    return arr


def mmd_squared(xs, ys, variant: str = "unbiased", *, kernel=None, lam: int = 3,
                scheme: str = "explicit", rescale: bool = False, threads: int = 1,
                mode: str = "auto") -> float:
    """Squared maximum mean discrepancy between two path samples.

    Parameters
    ----------
    xs, ys : sequence of TimeSeries
    variant : {'unbiased', 'biased'}
        ``biased``: mean(Kxx) + mean(Kyy) - 2*mean(Kxy), always >= 0 up to
        rounding.  ``unbiased``: diagonal terms of the self-blocks are
        excluded; the estimate may be negative.  Needs at least 2 paths per
        sample.
    kernel, lam, scheme, rescale, threads, mode : optional
        As in :func:`gram`.

    Returns
    -------
    float
    """
    if variant not in ("biased", "unbiased"):
        raise InputError(f"unknown variant {variant!r}; choose 'biased' or 'unbiased'")
    xs, ys = list(xs), list(ys)
    m, n = len(xs), len(ys)
    if m < 1 or n < 1:
        raise InputError("empty collection")
    if variant == "unbiased" and (m < 2 or n < 2):
        raise InputError("the unbiased estimator needs at least 2 paths per sample")
    opts = dict(kernel=kernel, lam=lam, scheme=scheme, rescale=rescale,
                threads=threads, mode=mode)
    kxx = gram(xs, **opts).values
    kyy = gram(ys, **opts).values
    kxy = gram(xs, ys, **opts).values
    if variant == "biased":
        return float(np.mean(kxx) + np.mean(kyy) - 2.0 * np.mean(kxy))
    sxx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    syy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(sxx + syy - 2.0 * np.mean(kxy))


def krr_fit(gram_matrix, targets, ridge: float = 0.0) -> np.ndarray:
    """Fit kernel ridge regression weights on a self-Gram matrix.

    Solves ``(K + ridge * I) w = targets`` by Cholesky factorization and
    polishes with one iterative-refinement step; the residual must come out
    at most ``1e-8 * ||targets||``.

    Parameters
    ----------
    gram_matrix : GramMatrix or array_like, shape (n, n)
        Symmetric self-Gram of the training paths.
    targets : array_like, shape (n,)
    ridge : float, optional
        Nonnegative regularization strength.

    Returns
    -------
    numpy.ndarray
        The weight vector w.

    Raises
    ------
    NumericalError
        When the factorization fails or the residual stays large; increasing
        the ridge usually fixes both.
    """
    k = _as_matrix(gram_matrix)
    if k.shape[0] != k.shape[1]:
        raise InputError(f"self-Gram must be square, got {k.shape}")
    if not np.allclose(k, k.T, rtol=1e-10, atol=1e-12):
        raise InputError("self-Gram must be symmetric")
    y = np.ascontiguousarray(targets, dtype=np.float64).ravel()
    if y.shape[0] != k.shape[0]:
        raise InputError(f"expected {k.shape[0]} targets, got {y.shape[0]}")
    if ridge < 0:
        raise InputError("ridge must be nonnegative")
    a = k + ridge * np.eye(k.shape[0])
    try:
        factor = cho_factor(a, lower=True)
    except LinAlgError as exc:
        raise NumericalError(
            f"Gram factorization failed ({exc}); increase the ridge"
        ) from exc
    w = cho_solve(factor, y)
    w = w + cho_solve(factor, y - a @ w)
    residual = float(np.linalg.norm(y - a @ w))
    bound = 1e-8 * float(np.linalg.norm(y))
    if residual > max(bound, 1e-300):
        raise NumericalError(
            f"ridge solve residual {residual:.3e} exceeds {bound:.3e}; "
            "increase the ridge"
        )
    return w


def krr_predict(cross_gram, weights) -> np.ndarray:
    """Predict with fitted ridge-regression weights.

    Parameters
    ----------
    cross_gram : GramMatrix or array_like, shape (p, n)
        Kernel values between the p prediction paths and the n training
        paths, in training order.
    weights : array_like, shape (n,)

    Returns
    -------
    numpy.ndarray, shape (p,)
    """
    k = _as_matrix(cross_gram)
    w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    if k.shape[1] != w.shape[0]:
        raise InputError(
            f"cross-Gram has {k.shape[1]} columns but there are {w.shape[0]} weights"
        )
    return k @ w


def write_gram_csv(gram_matrix: GramMatrix, target=None) -> str | None:
    """Write a Gram matrix as CSV with a `#` provenance comment line.

    Parameters
    ----------
    gram_matrix : GramMatrix
    target : str, pathlib.Path, text stream, or None
        Destination; when None the CSV text is returned.

    Returns
    -------
    str or None
    """
    buf = io.StringIO()
    buf.write("# " + json.dumps(gram_matrix.config, sort_keys=True) + "\n")
    for row in gram_matrix.values:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
        return None
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(text)
    return None


def read_gram_csv(source) -> GramMatrix:
    """Read a Gram matrix written by :func:`write_gram_csv`.

    Parameters
    ----------
    source : str, pathlib.Path, or text stream

    Returns
    -------
    GramMatrix
        With the provenance comment restored into ``config`` when present.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc.strerror}") from None
    config: dict = {}
    rows = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            payload = stripped.lstrip("#").strip()
            if payload.startswith("{"):
                try:
                    config = json.loads(payload)
                except json.JSONDecodeError:
                    pass
            continue
        try:
            rows.append([float(f) for f in stripped.split(",")])
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric Gram entry") from None
    if not rows:
        raise InputError("empty Gram CSV")
    width = len(rows[0])
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise InputError(f"ragged Gram CSV near data row {lineno}")
    return GramMatrix(np.array(rows), config)
