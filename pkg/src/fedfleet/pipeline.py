"""Windowed feature pipeline.

Per-second records become supervised windows: each window is m consecutive
seconds of the five engineered features [a, v, sqrt(v), v^3, sqrt(dd)], and
its label is the summed energy (Wh) over those m seconds. Splits are
chronological because stride-1 windows overlap almost entirely; a random
split would leak nearly every test label into training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorrelationError, FeatureError, SplitError
from .trip import TripRecord, load_trip_csv  # re-exported ingestion surface

__all__ = [
    "FeatureVector",
    "WindowedDataset",
    "Standardizer",
    "SplitSpec",
    "VehicleData",
    "load_trip_csv",
    "engineer_features",
    "make_windows",
    "chronological_split",
    "fit_standardizer",
    "apply_standardizer",
    "speed_energy_lag",
    "prepare_vehicle",
]

FEATURE_NAMES = ("accel", "speed", "sqrt_speed", "speed_cubed", "sqrt_dist_delta")

EPS_STD = 1e-12


@dataclass(frozen=True)
class WindowedDataset:
    X: np.ndarray  # (n, m, 5)
    y: np.ndarray  # (n,) Wh
    origins: np.ndarray  # (n,) start index of each window in the source series

    def __post_init__(self):
        if self.X.ndim != 3 or self.X.shape[2] != len(FEATURE_NAMES):
            raise ValueError("X must have shape (n, m, 5)")
        if len(self.y) != len(self.X) or len(self.origins) != len(self.X):
            raise ValueError("labels/origins must match window count")

    def __len__(self):
        return len(self.X)

    @property
    def window_length(self):
        return self.X.shape[1]

    def take(self, start: int, stop: int) -> "WindowedDataset":
        return WindowedDataset(self.X[start:stop], self.y[start:stop], self.origins[start:stop])


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray  # (5,)
    std: np.ndarray  # (5,), floored at EPS_STD

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def inverse(self, Xs: np.ndarray) -> np.ndarray:
        return Xs * self.std + self.mean


@dataclass(frozen=True)
class SplitSpec:
    train: int
    val: int
    test: int

    def __post_init__(self):
        if min(self.train, self.val, self.test) <= 0:
            raise ValueError("split weights must be positive integers")

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"split must be a:b:c, got {text!r}")
        return cls(*(int(p) for p in parts))

    def __str__(self):
        return f"{self.train}:{self.val}:{self.test}"


def engineer_features(rec: TripRecord) -> np.ndarray:
    """Five features per second: [a, v, sqrt(v), v^3, sqrt(dd)].

    dd is the per-second distance increment; the first sample's dd is 0 by
    convention. Negative speed or distance increment means corrupt input.
    """
    v = rec.speed
    if np.any(v < 0):
        raise FeatureError(f"vehicle {rec.vehicle_id}: negative speed")
    dd = np.empty(len(rec))
    dd[0] = 0.0
    dd[1:] = np.diff(rec.distance)
    if np.any(dd < 0):
        if np.any(dd < -1e-9):
            raise FeatureError(f"vehicle {rec.vehicle_id}: negative distance increment")
        dd = np.maximum(dd, 0.0)  # forgive float dust from the loader
    return np.stack([rec.accel, v, np.sqrt(v), v**3, np.sqrt(dd)], axis=1)


def make_windows(features: np.ndarray, energies: np.ndarray, m: int, stride: int = 1) -> WindowedDataset:
    """Slice stride-aligned m-step windows; label = sum of in-window energies."""
    if m < 1 or stride < 1:
        raise ValueError("m and stride must be >= 1")
    n_samples = len(features)
    if len(energies) != n_samples:
        raise ValueError("features/energies length mismatch")
    if n_samples < m:
        raise SplitError(f"series of length {n_samples} is shorter than window m={m}")
    origins = np.arange(0, n_samples - m + 1, stride)
    X = np.stack([features[k : k + m] for k in origins])
    y = np.array([float(np.sum(energies[k : k + m])) for k in origins])
    return WindowedDataset(X=X, y=y, origins=origins)


def chronological_split(ds: WindowedDataset, spec: SplitSpec):
    """Contiguous train/val/test ranges in time order.

    Sizes are floor(n*w) for train and val (integer arithmetic), remainder to
    test, so no window is dropped or duplicated.
    """
    n = len(ds)
    total = spec.train + spec.val + spec.test
    n_train = n * spec.train // total
    n_val = n * spec.val // total
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) <= 0:
        raise SplitError(f"split {spec} leaves an empty partition for n={n}")
    return (
        ds.take(0, n_train),
        ds.take(n_train, n_train + n_val),
        ds.take(n_train + n_val, n),
    )


def fit_standardizer(train: WindowedDataset) -> Standardizer:
    """Per-feature population statistics over every timestep of every window."""
    if len(train) == 0:
        raise ValueError("cannot fit a standardizer on an empty split")
    flat = train.X.reshape(-1, train.X.shape[2])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)  # population, deterministic even for n=1
    return Standardizer(mean=mean, std=np.maximum(std, EPS_STD))


def apply_standardizer(stdzr: Standardizer, ds: WindowedDataset) -> WindowedDataset:
    """Transform features; labels pass through untouched (MAE stays in Wh)."""
    return WindowedDataset(X=stdzr.transform(ds.X), y=ds.y, origins=ds.origins)


def _rolling_mean(x: np.ndarray, w: int) -> np.ndarray:
    c = np.cumsum(np.concatenate(([0.0], x)))
    return (c[w:] - c[:-w]) / w


def _rolling_sum(x: np.ndarray, w: int) -> np.ndarray:
    c = np.cumsum(np.concatenate(([0.0], x)))
    return c[w:] - c[:-w]


def speed_energy_lag(rec: TripRecord, max_lag: int = 60, smooth: int = 60) -> int:
    """Lag (s) maximizing Pearson correlation between smoothed speed and energy.

    Speed is smoothed with a rolling mean and energy with a rolling sum, both
    over `smooth` seconds; the energy series is shifted forward by each
    candidate lag. Ties break toward the smaller lag.
    """
    if len(rec) <= 2 * max_lag:
        raise ValueError("record too short for the requested max_lag")
    sp = _rolling_mean(rec.speed, smooth)
    en = _rolling_sum(rec.energy_wh, smooth)
    best_lag, best_corr = 0, -np.inf
    for lag in range(max_lag + 1):
        a = sp[: len(sp) - lag]
        b = en[lag:]
        if np.std(a) == 0.0 or np.std(b) == 0.0:
            raise CorrelationError("constant series: correlation undefined")
        corr = float(np.corrcoef(a, b)[0, 1])
        if corr > best_corr:
            best_lag, best_corr = lag, corr
    return best_lag


@dataclass(frozen=True)
class VehicleData:
    """One client's ready-to-train splits (features standardized on train)."""

    vehicle_id: str
    train: WindowedDataset
    val: WindowedDataset
    test: WindowedDataset
    standardizer: Standardizer


def prepare_vehicle(rec: TripRecord, m: int = 60, split: SplitSpec | None = None) -> VehicleData:
    """Record -> features -> windows -> chronological split -> standardize."""
    split = split or SplitSpec(8, 1, 1)
    feats = engineer_features(rec)
    ds = make_windows(feats, rec.energy_wh, m)
    train, val, test = chronological_split(ds, split)
    stdzr = fit_standardizer(train)
    return VehicleData(
        vehicle_id=rec.vehicle_id,
        train=apply_standardizer(stdzr, train),
        val=apply_standardizer(stdzr, val),
        test=apply_standardizer(stdzr, test),
        standardizer=stdzr,
    )
