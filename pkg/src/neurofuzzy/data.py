"""Daily temperature / dew point records: loading, generation, splitting, scaling, metrics."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ParseError, ScaleError, SchemaError

log = logging.getLogger(__name__)

FEATURES = ("tmin_c", "tmax_c", "tmean_c")
TARGET = "dpt_c"
CSV_HEADER = ("date",) + FEATURES + (TARGET,)

MAGNUS_A = 17.27
MAGNUS_B = 237.7  # degC


class ConsistencyWarning(UserWarning):
    """A record violates tmin <= tmean <= tmax."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented daily records.

    ``rh`` is only populated by :func:`gen_synthetic`; it keeps the
    relative-humidity trace the dew points were derived from.
    """

    dates: np.ndarray  # datetime64[D]
    tmin: np.ndarray
    tmax: np.ndarray
    tmean: np.ndarray
    dpt: np.ndarray
    rh: np.ndarray | None = None

    def __post_init__(self):
        cols = [np.asarray(self.dates, dtype="datetime64[D]")]
        cols += [np.asarray(c, dtype=float) for c in (self.tmin, self.tmax, self.tmean, self.dpt)]
        n = len(cols[0])
        if n < 1:
            raise InvalidArgumentError("dataset needs at least one record")
        if any(len(c) != n for c in cols):
            raise InvalidArgumentError("dataset columns have different lengths")
        for name, c in zip(("tmin", "tmax", "tmean", "dpt"), cols[1:]):
            if not np.all(np.isfinite(c)):
                raise InvalidArgumentError(f"column {name} contains non-finite values")
        for attr, c in zip(("dates", "tmin", "tmax", "tmean", "dpt"), cols):
            c.flags.writeable = False
            object.__setattr__(self, attr, c)
        if self.rh is not None:
            rh = np.asarray(self.rh, dtype=float)
            rh.flags.writeable = False
            object.__setattr__(self, "rh", rh)
        bad = np.flatnonzero((self.tmin > self.tmean) | (self.tmean > self.tmax))
        if bad.size:
            warnings.warn(
                f"{bad.size} record(s) violate tmin <= tmean <= tmax (first at row {int(bad[0])})",
                ConsistencyWarning,
                stacklevel=3,
            )

    def __len__(self):
        return len(self.dates)

    @property
    def x(self) -> np.ndarray:
        """Feature matrix ``(n, 3)`` in the order tmin, tmax, tmean."""
        return np.column_stack([self.tmin, self.tmax, self.tmean])

    @property
    def y(self) -> np.ndarray:
        return np.array(self.dpt)

    def take(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        rh = None if self.rh is None else self.rh[idx]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConsistencyWarning)
            return Dataset(self.dates[idx], self.tmin[idx], self.tmax[idx], self.tmean[idx], self.dpt[idx], rh)


@dataclass(frozen=True, eq=False)
class SplitDataset:
    train: Dataset
    test: Dataset
    seed: int
    fraction: float
    train_idx: np.ndarray
    test_idx: np.ndarray


# ---------------------------------------------------------------- CSV io


def load_csv(path) -> Dataset:
    """Read a ``date,tmin_c,tmax_c,tmean_c,dpt_c`` file in file order."""
    dates, v = _read_columns(path, CSV_HEADER)
    return Dataset(dates, v[:, 0], v[:, 1], v[:, 2], v[:, 3])


def load_features(path):
    """Dates and feature matrix from a file that may lack the target column."""
    dates, v = _read_columns(path, CSV_HEADER[:-1])
    return dates, v


def _read_columns(path, columns):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        pos = {c: header.index(c) for c in columns}
        dates, values = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}", line)
            try:
                dates.append(dt.date.fromisoformat(row[pos["date"]].strip()))
            except ValueError:
                raise ParseError(f"{path}:{line}: bad date {row[pos['date']]!r}", line) from None
            rec = []
            for c in columns[1:]:
                field = row[pos[c]].strip()
                try:
                    v = float(field)
                except ValueError:
                    raise ParseError(f"{path}:{line}: bad number {field!r} in {c}", line) from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}:{line}: non-finite value in {c}", line)
                rec.append(v)
            values.append(rec)
    if not values:
        raise SchemaError(f"{path}: no data rows")
    return np.array(dates, dtype="datetime64[D]"), np.array(values)


def write_csv(ds: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for d, a, b, c, e in zip(ds.dates, ds.tmin, ds.tmax, ds.tmean, ds.dpt):
            w.writerow([str(d), repr(float(a)), repr(float(b)), repr(float(c)), repr(float(e))])


# ------------------------------------------------------------ splitting


def train_size(n: int, fraction: float) -> int:
    # round half up; Python's round() is banker's rounding
    return int(math.floor(fraction * n + 0.5))


def split_random(ds: Dataset, fraction: float, seed: int) -> SplitDataset:
    """Seeded shuffle followed by a prefix split into train and test."""
    if not 0 < fraction < 1:
        raise InvalidArgumentError(f"fraction must be in (0, 1), got {fraction}")
    n = len(ds)
    n_train = train_size(n, fraction)
    if n_train < 1 or n_train > n - 1:
        raise InvalidArgumentError(f"fraction {fraction} of {n} records leaves an empty partition")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return SplitDataset(ds.take(tr), ds.take(te), seed, fraction, tr, te)


# -------------------------------------------------------------- scaling


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Affine map of every column from ``[lo, hi]`` onto ``[-1, 1]``."""

    lo: np.ndarray
    hi: np.ndarray
    names: tuple[str, ...] = ()

    @classmethod
    def fit(cls, a, names=()):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if len(a) == 0:
            raise InvalidArgumentError("cannot fit a scaler on no data")
        lo, hi = a.min(axis=0), a.max(axis=0)
        names = tuple(names) or tuple(f"column {i}" for i in range(a.shape[1]))
        for name, l, h in zip(names, lo, hi):
            if not h > l:
                raise ScaleError(f"feature {name} is constant ({l}); cannot scale")
        return cls(lo, hi, names)

    def apply(self, a):
        return (np.asarray(a, dtype=float) - self.lo) / (self.hi - self.lo) * 2.0 - 1.0

    def invert(self, z):
        return (np.asarray(z, dtype=float) + 1.0) / 2.0 * (self.hi - self.lo) + self.lo


def fit_scaler(ds: Dataset) -> tuple[MinMaxScaler, MinMaxScaler]:
    """Feature and target scalers fitted on ``ds`` (the training partition)."""
    return MinMaxScaler.fit(ds.x, FEATURES), MinMaxScaler.fit(ds.y, (TARGET,))


# -------------------------------------------------------------- metrics


@dataclass(frozen=True)
class Metrics:
    mse: float
    rmse: float
    r: float  # nan when either vector has zero variance

    @property
    def r_defined(self) -> bool:
        return not math.isnan(self.r)


def compute_metrics(pred, actual) -> Metrics:
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.size == 0 or pred.size != actual.size:
        raise InvalidArgumentError(f"need equal non-zero lengths, got {pred.size} and {actual.size}")
    mse = float(np.mean((pred - actual) ** 2))
    dp, da = pred - pred.mean(), actual - actual.mean()
    denom = math.sqrt(float(dp @ dp) * float(da @ da))
    r = float(dp @ da) / denom if denom > 0 else math.nan
    if denom > 0:
        r = max(-1.0, min(1.0, r))
    return Metrics(mse, math.sqrt(mse), r)


# ------------------------------------------------------ synthetic data


def magnus_dew_point(t, rh):
    """Dew point (degC) from air temperature (degC) and relative humidity (%)."""
    t = np.asarray(t, dtype=float)
    gamma = MAGNUS_A * t / (MAGNUS_B + t) + np.log(np.asarray(rh, dtype=float) / 100.0)
    return MAGNUS_B * gamma / (MAGNUS_A - gamma)


def gen_synthetic(n_days: int, seed: int, noise_sd: float = 1.0, start="1998-01-01") -> Dataset:
    """Continental-climate daily series standing in for station records.

    Mean temperature follows an annual cycle (mean 12, amplitude 14 degC)
    plus AR(1) anomalies. Relative humidity runs opposite to the seasonal
    cycle with its own AR(1) anomalies, clipped to [20, 95] %. Dry days get
    a wider diurnal range, so the spread tmax - tmin carries humidity
    information. Dew point comes from the Magnus formula plus observation
    noise, capped at the mean temperature.
    """
    if n_days < 1:
        raise InvalidArgumentError(f"n_days must be >= 1, got {n_days}")
    if noise_sd < 0:
        raise InvalidArgumentError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    dates = np.datetime64(start, "D") + np.arange(n_days)
    doy = (dates - dates.astype("datetime64[Y]")).astype(int) + 1
    season = np.sin(2.0 * np.pi * (doy - 105) / 365.25)

    shocks = rng.normal(size=(2, n_days))
    t_anom = _ar1(shocks[0], 0.7, 2.5)
    rh_anom = _ar1(shocks[1], 0.6, 7.0)

    tmean = 12.0 + 14.0 * season + t_anom
    rh = np.clip(57.5 - 25.0 * season + rh_anom, 20.0, 95.0)

    half_range = np.maximum(2.0 + 0.1 * (95.0 - rh) + rng.normal(0.0, 0.3, n_days), 0.5)
    skew = rng.uniform(-0.2, 0.2, n_days)
    tmin = tmean - half_range * (1.0 + skew)
    tmax = tmean + half_range * (1.0 - skew)

    dpt = magnus_dew_point(tmean, rh)
    if noise_sd > 0:
        dpt = np.minimum(dpt + rng.normal(0.0, noise_sd, n_days), tmean)
    return Dataset(dates, tmin, tmax, tmean, dpt, rh)


def _ar1(shocks, phi, sd):
    # stationary AR(1) with marginal standard deviation ``sd``
    out = np.empty_like(shocks)
    innov = sd * math.sqrt(1.0 - phi**2)
    out[0] = sd * shocks[0]
    for i in range(1, len(shocks)):
        out[i] = phi * out[i - 1] + innov * shocks[i]
    return out
