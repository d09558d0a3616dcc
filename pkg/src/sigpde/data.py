"""Time-series container, preprocessing transforms, CSV I/O, and fBM sampling.

The :class:`TimeSeries` type carries sample times alongside values, but the
PDE solver is driven by sample order (the increments), not by timestamps;
timestamps enter computations only through :func:`time_augment`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError

__all__ = [
    "TimeSeries",
    "load_csv",
    "write_csv",
    "rescale_max_abs",
    "time_augment",
    "scale",
    "insert_midpoints",
    "sample_fbm",
]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A multivariate time series sampled at strictly increasing times.

    Parameters
    ----------
    times : array_like, shape (length,)
        Strictly increasing sample times.
    values : array_like, shape (length, channels)
        Sample values; must be finite.
    name : str, optional
        Identifier used by the long CSV layout; not part of the data.
    """

    times: np.ndarray
    values: np.ndarray
    name: str | None = field(default=None)

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if times.ndim != 1:
            raise InputError("times must be one-dimensional")
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InputError("values must be a length x channels matrix")
        if times.shape[0] != values.shape[0]:
            raise InputError(
                f"times has {times.shape[0]} samples but values has {values.shape[0]}"
            )
        if times.shape[0] < 1:
            raise InputError("a time series needs at least one sample")
        if values.shape[1] < 1:
            raise InputError("a time series needs at least one channel")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise InputError("times and values must be finite")
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            bad = int(np.flatnonzero(np.diff(times) <= 0)[0]) + 1
            raise InputError(f"times must be strictly increasing (sample {bad})")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        """Number of samples."""
        return self.times.shape[0]

    @property
    def channels(self) -> int:
        """Number of value channels."""
        return self.values.shape[1]


def rescale_max_abs(x: TimeSeries) -> TimeSeries:
    """Divide values by their largest absolute entry.

    No-op when the largest absolute entry is at most 1e-300, so constant-zero
    series pass through unchanged.

    Parameters
    ----------
    x : TimeSeries

    Returns
    -------
    TimeSeries
        Series with values in [-1, 1].
    """
    m = float(np.max(np.abs(x.values))) if x.values.size else 0.0
    if m <= 1e-300:
        return x
    return TimeSeries(x.times, x.values / m, name=x.name)


def time_augment(x: TimeSeries) -> TimeSeries:
    """Prepend the normalized sample times as a new first channel.

    Times are mapped affinely onto [0, 1]; a single-sample series gets a 0.

    Parameters
    ----------
    x : TimeSeries

    Returns
    -------
    TimeSeries
        Series with channels increased by one.
    """
    span = x.times[-1] - x.times[0]
    if x.length > 1 and span > 0:
        tnorm = (x.times - x.times[0]) / span
    else:
        tnorm = np.zeros(x.length)
    return TimeSeries(x.times, np.column_stack([tnorm, x.values]), name=x.name)


def scale(x: TimeSeries, c: float) -> TimeSeries:
    """Multiply all values by the scalar ``c``.

    Parameters
    ----------
    x : TimeSeries
    c : float

    Returns
    -------
    TimeSeries
    """
    if not np.isfinite(c):
        raise InputError("scale factor must be finite")
    return TimeSeries(x.times, x.values * float(c), name=x.name)


def insert_midpoints(x: TimeSeries) -> TimeSeries:
    """Insert the midpoint of every segment, doubling the segment count.

    The piecewise-linear trace of the series is preserved exactly, so any
    reparametrization-invariant quantity is unchanged.

    Parameters
    ----------
    x : TimeSeries
        Needs at least two samples.

    Returns
    -------
    TimeSeries
        Series of length ``2 * x.length - 1``.
    """
    if x.length < 2:
        raise InputError("insert_midpoints needs at least two samples")
    times = np.empty(2 * x.length - 1)
    values = np.empty((2 * x.length - 1, x.channels))
    times[0::2] = x.times
    times[1::2] = 0.5 * (x.times[:-1] + x.times[1:])
    values[0::2] = x.values
    values[1::2] = 0.5 * (x.values[:-1] + x.values[1:])
    return TimeSeries(times, values, name=x.name)


def sample_fbm(hurst: float, length: int, count: int = 1, seed: int = 0) -> list[TimeSeries]:
    """Sample fractional Brownian motion paths on a uniform grid over [0, 1].

    Exact Gaussian sampling via a Cholesky factorization of the covariance
    ``R(s, t) = 0.5 * (s^{2H} + t^{2H} - |t - s|^{2H})``; paths start at zero
    and have unit variance at time 1.

    Parameters
    ----------
    hurst : float
        Hurst exponent, strictly between 0 and 1.
    length : int
        Number of samples per path, at least 2.
    count : int, optional
        Number of independent paths.
    seed : int or numpy.random.Generator, optional
        PRNG seed (the call is bit-reproducible), or an existing generator
        whose stream the draws consume.

    Returns
    -------
    list of TimeSeries
        ``count`` single-channel paths named ``fbm-0``, ``fbm-1``, ...

    Raises
    ------
    NumericalError
        If the covariance factorization fails; a coarser grid usually helps.
    """
    if not 0.0 < hurst < 1.0:
        raise InputError("hurst must lie strictly between 0 and 1")
    if length < 2:
        raise InputError("length must be at least 2")
    if count < 1:
        raise InputError("count must be positive")
    t = np.linspace(0.0, 1.0, length)
    s = t[1:]
    h2 = 2.0 * hurst
    cov = 0.5 * (s[:, None] ** h2 + s[None, :] ** h2 - np.abs(s[:, None] - s[None, :]) ** h2)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"fBM covariance factorization failed for hurst={hurst}, length={length}; "
            "try a coarser grid"
        ) from exc
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((count, length - 1)) @ chol.T
    paths = np.concatenate([np.zeros((count, 1)), draws], axis=1)
    return [TimeSeries(t, paths[i][:, None], name=f"fbm-{i}") for i in range(count)]


# --- CSV layouts ------------------------------------------------------------
#
# wide: header `t,c1..cd`, one series per file.
# long: header `series_id,t,c1..cd`, series in order of first appearance.
# UTF-8, `.` decimal, `,` separator; `#` lines are comments.


def _parse_rows(stream) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((lineno, [f.strip() for f in stripped.split(",")]))
    if not rows:
        raise InputError("empty CSV: no header row")
    return rows

def _parse_floats(fields: list[str], lineno: int) -> list[float]:
    out = []
    for f in fields:
        try:
            out.append(float(f))
        except ValueError:
            raise InputError(f"line {lineno}: {f!r} is not a number") from None
    return out


def load_csv(source, layout: str = "wide") -> list[TimeSeries]:
    """Load time series from a CSV file, path, or stream.

    Parameters
    ----------
    source : str, pathlib.Path, or text stream
        Where to read from.
    layout : {'wide', 'long'}
        ``wide``: header ``t,c1..cd``, one series per file.
        ``long``: header ``series_id,t,c1..cd``, many series per file,
        returned in order of first appearance of their id.

    Returns
    -------
    list of TimeSeries

    Raises
    ------
    InputError
        On malformed headers, ragged or non-numeric rows, or non-monotone
        times; messages cite the offending line number.
    """
    if layout not in ("wide", "long"):
        raise InputError(f"unknown CSV layout {layout!r}")
    if hasattr(source, "read"):
        rows = _parse_rows(source)
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                rows = _parse_rows(fh)
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc.strerror}") from None

    header_line, header = rows[0]
    body = rows[1:]
    lead = ["series_id", "t"] if layout == "long" else ["t"]
    if len(header) < len(lead) + 1 or [h.lower() for h in header[: len(lead)]] != lead:
        want = ",".join(lead + ["c1..cd"])
        raise InputError(f"line {header_line}: malformed header, expected `{want}`")
    d = len(header) - len(lead)

    series: dict[str, tuple[list[float], list[list[float]]]] = {}
    order: list[str] = []
    for lineno, fields in body:
        if len(fields) != len(header):
            raise InputError(
                f"line {lineno}: expected {len(header)} fields, got {len(fields)}"
            )
        if layout == "long":
            sid = fields[0]
            nums = _parse_floats(fields[1:], lineno)
        else:
            sid = ""
            nums = _parse_floats(fields, lineno)
        if sid not in series:
            series[sid] = ([], [])
            order.append(sid)
        times, values = series[sid]
        if times and nums[0] <= times[-1]:
            raise InputError(f"line {lineno}: time {nums[0]!r} is not increasing")
        times.append(nums[0])
        values.append(nums[1:])
    if not body:
        raise InputError("CSV has a header but no data rows")

    out = []
    for sid in order:
        times, values = series[sid]
        out.append(
            TimeSeries(np.array(times), np.array(values).reshape(len(times), d),
                       name=sid or None)
        )
    return out


def write_csv(collection, target=None, layout: str = "wide", header_comment: str | None = None) -> str | None:
    """Write time series as CSV with 17-significant-digit round-trip fidelity.

    Parameters
    ----------
    collection : TimeSeries or sequence of TimeSeries
        The wide layout accepts exactly one series.
    target : str, pathlib.Path, text stream, or None
        Destination; when None the CSV is returned as a string.
    layout : {'wide', 'long'}
        See :func:`load_csv`.
    header_comment : str, optional
        Emitted verbatim as a leading ``# ...`` comment line.

    Returns
    -------
    str or None
        The CSV text when ``target`` is None.
    """
    if isinstance(collection, TimeSeries):
        collection = [collection]
    collection = list(collection)
    if layout == "wide" and len(collection) != 1:
        raise InputError("wide layout holds exactly one series per file")
    if not collection:
        raise InputError("nothing to write")
    d = collection[0].channels
    if any(x.channels != d for x in collection):
        raise InputError("all series in one file must share the channel count")

    buf = io.StringIO()
    if header_comment is not None:
        buf.write(f"# {header_comment}\n")
    cols = ["t"] + [f"c{i + 1}" for i in range(d)]
    if layout == "long":
        cols = ["series_id"] + cols
    buf.write(",".join(cols) + "\n")
    for idx, x in enumerate(collection):
        sid = x.name if x.name is not None else f"series-{idx}"
        for i in range(x.length):
            nums = [x.times[i], *x.values[i]]
            row = ",".join(f"{v:.17g}" for v in nums)
            if layout == "long":
                row = f"{sid},{row}"
            buf.write(row + "\n")

    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
        return None
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(text)
    return None
