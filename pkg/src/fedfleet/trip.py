"""Per-second trip records and their CSV representation.

A TripRecord is one vehicle's log at 1 Hz. Five columns have fixed roles
(time, speed, acceleration, cumulative distance, per-second energy in Wh);
anything else rides along as an extra. The CSV loader takes a column map so
files with different header names can be ingested without rewriting them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TripLoadError

REQUIRED_ROLES = ("time", "speed", "accel", "distance", "energy")

# canonical header names used by the synthetic fleet writer
CANONICAL_COLUMNS = {
    "time": "time_s",
    "speed": "speed_mps",
    "accel": "accel_mps2",
    "distance": "distance_m",
    "energy": "energy_wh",
}


@dataclass
class TripRecord:
    vehicle_id: str
    time: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    distance: np.ndarray
    energy_wh: np.ndarray
    extras: dict = field(default_factory=dict)
    soc_clamp_events: int = 0
    power_clamp_events: int = 0

    def __post_init__(self):
        cols = [self.time, self.speed, self.accel, self.distance, self.energy_wh]
        n = len(self.time)
        if any(len(c) != n for c in cols) or any(
            len(v) != n for v in self.extras.values()
        ):
            raise TripLoadError(f"vehicle {self.vehicle_id}: column lengths differ")
        if n == 0:
            raise TripLoadError(f"vehicle {self.vehicle_id}: empty record")
        dt = np.diff(self.time)
        if dt.size and np.any(np.abs(dt - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(dt - 1.0) > 1e-9)) + 1
            raise TripLoadError(
                f"vehicle {self.vehicle_id}: time not strictly increasing at 1 Hz "
                f"(row {bad})"
            )
        if np.any(self.speed < 0):
            bad = int(np.argmax(self.speed < 0))
            raise TripLoadError(f"vehicle {self.vehicle_id}: negative speed at row {bad}")
        dd = np.diff(self.distance)
        if dd.size and np.any(dd < -1e-9):
            bad = int(np.argmax(dd < -1e-9)) + 1
            raise TripLoadError(
                f"vehicle {self.vehicle_id}: distance decreases at row {bad}"
            )

    def __len__(self):
        return len(self.time)


def write_trip_csv(rec: TripRecord, path) -> None:
    """Emit one vehicle's record with canonical headers plus extras.

    Floats are written with repr so a load round-trips bit-exactly.
    """
    headers = [CANONICAL_COLUMNS[r] for r in REQUIRED_ROLES]
    extra_names = sorted(rec.extras)
    columns = [rec.time, rec.speed, rec.accel, rec.distance, rec.energy_wh]
    columns += [rec.extras[k] for k in extra_names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(headers + extra_names)
        for i in range(len(rec)):
            w.writerow([repr(float(c[i])) for c in columns])


def load_trip_csv(path, column_map=None, vehicle_id=None) -> TripRecord:
    """Read a per-second trip CSV.

    column_map maps role -> header name for the five required roles; columns
    not claimed by a role are preserved as extras. Errors name the offending
    row and column.
    """
    cmap = dict(CANONICAL_COLUMNS)
    if column_map:
        cmap.update(column_map)
    missing = [r for r in REQUIRED_ROLES if r not in cmap]
    if missing:
        raise TripLoadError(f"{path}: column_map lacks roles {missing}")

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TripLoadError(f"{path}: empty file") from None
        rows = list(reader)

    index = {name: i for i, name in enumerate(header)}
    for role in REQUIRED_ROLES:
        if cmap[role] not in index:
            raise TripLoadError(f"{path}: missing column {cmap[role]!r} for role {role!r}")

    data = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise TripLoadError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise TripLoadError(
                    f"{path}: non-numeric value at row {i + 1}, column {header[j]!r}"
                ) from None
            if math.isnan(v):
                raise TripLoadError(f"{path}: NaN at row {i + 1}, column {header[j]!r}")
            data[i, j] = v

    role_cols = {cmap[r] for r in REQUIRED_ROLES}
    extras = {
        name: data[:, j].copy() for name, j in index.items() if name not in role_cols
    }
    if vehicle_id is None:
        import os

        vehicle_id = os.path.splitext(os.path.basename(str(path)))[0]
    return TripRecord(
        vehicle_id=vehicle_id,
        time=data[:, index[cmap["time"]]].copy(),
        speed=data[:, index[cmap["speed"]]].copy(),
        accel=data[:, index[cmap["accel"]]].copy(),
        distance=data[:, index[cmap["distance"]]].copy(),
        energy_wh=data[:, index[cmap["energy"]]].copy(),
        extras=extras,
    )
