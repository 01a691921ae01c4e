"""Battery cell model and road-load trip synthesis.

The cell is a one-RC-pair equivalent circuit with SoC-dependent lookup
tables: open-circuit voltage V_oc, series resistance R0, and the transient
pair (R_p1, C_p1). Pack power maps to cell current, the cell integrates by
forward Euler at 1 s, and per-second energy increments accumulate the cell
energy integral. A longitudinal road-load surrogate converts a synthetic
drive cycle into battery-side power, so a whole fleet of per-second trip
records can be generated from a single seed.

Units: SI internally (W, J, m/s); watt-hours only at the record surface.
Sign convention: positive current/power is discharge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateVoltageError
from .seeding import derive_seed
from .trip import TripRecord

G = 9.81  # m/s^2


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear map on sorted knots; clamps outside the knot span."""

    x: tuple
    y: tuple

    def __post_init__(self):
        if len(self.x) < 2 or len(self.x) != len(self.y):
            raise ValueError("need >= 2 matching knots")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("knots must be strictly increasing")

    def __call__(self, q):
        return np.interp(q, self.x, self.y)


@dataclass(frozen=True)
class BatteryParams:
    n_bc: int = 600
    q_bc: float = 71000.0  # A*s per cell
    voc_table: PiecewiseLinear = field(
        default=PiecewiseLinear((0.0, 0.1, 0.5, 0.9, 1.0), (3.40, 3.55, 3.75, 4.05, 4.20))
    )
    r0_table: PiecewiseLinear = field(
        default=PiecewiseLinear((0.0, 1.0), (0.002, 0.002))
    )
    rp1_table: PiecewiseLinear = field(
        default=PiecewiseLinear((0.0, 1.0), (0.0015, 0.0015))
    )
    cp1_table: PiecewiseLinear = field(
        default=PiecewiseLinear((0.0, 1.0), (5000.0, 5000.0))
    )
    pack_power_limit: float = 160000.0
    series_count: int = 120  # cells in series; parallel strings = n_bc / series_count

    def __post_init__(self):
        if self.n_bc < 1:
            raise ValueError("n_bc must be >= 1")
        if self.q_bc <= 0:
            raise ValueError("q_bc must be positive")
        for name, table, lo_ok in (
            ("voc_table", self.voc_table, lambda v: v > 0),
            ("r0_table", self.r0_table, lambda v: v >= 0),
            ("rp1_table", self.rp1_table, lambda v: v > 0),
            ("cp1_table", self.cp1_table, lambda v: v > 0),
        ):
            if any(k < 0.0 or k > 1.0 for k in table.x):
                raise ValueError(f"{name}: knots outside the [0,1] SoC domain")
            # table is piecewise linear, so knot values bound the whole domain
            if not all(lo_ok(v) for v in table.y):
                raise ValueError(f"{name}: values violate sign constraint")


@dataclass(frozen=True)
class BatteryCellState:
    soc: float
    v_p1: float = 0.0
    j_cell: float = 0.0  # cumulative cell energy, joules
    clamp_events: int = 0

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError("soc must lie in [0,1]")


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1500.0
    drag_area: float = 0.6  # C_d * A, m^2
    air_density: float = 1.2
    c_rr: float = 0.01
    driveline_eff: float = 0.9
    regen_fraction: PiecewiseLinear = field(
        default=PiecewiseLinear((0.0, 1.0, 3.0, 8.0), (0.0, 0.0, 0.2, 0.35))
    )
    aux_power: float = 0.0
    motor_power_limit: float = 102000.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not 0.0 < self.driveline_eff <= 1.0:
            raise ValueError("driveline_eff must lie in (0,1]")
        rf = self.regen_fraction
        if rf(0.0) != 0.0:
            raise ValueError("regen_fraction must be 0 at standstill")
        if any(b < a for a, b in zip(rf.y, rf.y[1:])):
            raise ValueError("regen_fraction must be non-decreasing in speed")
        if any(v < 0.0 or v > 1.0 for v in rf.y):
            raise ValueError("regen_fraction values must lie in [0,1]")


@dataclass(frozen=True)
class DriveCycle:
    speed: np.ndarray  # m/s, one sample per second
    grade: np.ndarray  # radians
    dt: float = 1.0
    duration: int = 1800

    def __post_init__(self):
        if self.dt != 1.0:
            raise ValueError("drive cycles are fixed at 1 Hz")
        if len(self.speed) != self.duration or len(self.grade) != self.duration:
            raise ValueError("speed/grade length must equal duration")
        if np.any(self.speed < 0):
            raise ValueError("speed must be non-negative")
        acc = np.diff(self.speed) / self.dt
        if acc.size and np.max(np.abs(acc)) > 3.5:
            raise ValueError("implied acceleration exceeds 3.5 m/s^2")


def cell_current(p_bp: float, n_bc: int, v_bc: float) -> float:
    """Cell current from pack power: I = P / (n_bc * V_bc). Positive = discharge."""
    if v_bc <= 0.0:
        raise DegenerateVoltageError(f"terminal voltage {v_bc} V is not positive")
    if n_bc < 1:
        raise ValueError("n_bc must be >= 1")
    return p_bp / (n_bc * v_bc)


def cell_energy_increment(soc: float, params: BatteryParams, i_bc: float, dt: float) -> float:
    """Rectangle-rule energy increment V_oc(soc) * I * dt, joules.

    Negative while regenerating.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    return float(params.voc_table(soc)) * i_bc * dt


def step_cell(state: BatteryCellState, params: BatteryParams, i_bc: float, dt: float):
    """One forward-Euler step; returns (new state, terminal voltage).

    Tables are evaluated at the pre-step SoC, and the returned terminal
    voltage uses the pre-step transient voltage, so the step is explicit.
    SoC leaving [0,1] is clamped and counted, not raised: the trip generator
    is expected to re-tune rather than crash mid-fleet.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    soc = state.soc
    r0 = float(params.r0_table(soc))
    rp1 = float(params.rp1_table(soc))
    cp1 = float(params.cp1_table(soc))
    v_bc = float(params.voc_table(soc)) - state.v_p1 - r0 * i_bc

    v_p1_next = state.v_p1 + dt * (i_bc / cp1 - state.v_p1 / (rp1 * cp1))
    soc_next = soc - dt * i_bc / params.q_bc
    clamps = state.clamp_events
    if soc_next < 0.0 or soc_next > 1.0:
        soc_next = min(max(soc_next, 0.0), 1.0)
        clamps += 1
    j_next = state.j_cell + cell_energy_increment(soc, params, i_bc, dt)
    return (
        BatteryCellState(soc=soc_next, v_p1=v_p1_next, j_cell=j_next, clamp_events=clamps),
        v_bc,
    )


def road_load_power(
    v: float,
    a: float,
    grade: float,
    veh: VehicleParams,
    pack_power_limit: float = math.inf,
) -> float:
    """Battery-side power for one longitudinal operating point.

    Wheel power is the standard road-load balance (inertia + grade + aero +
    rolling) times speed. Positive wheel power is divided by the driveline
    efficiency; negative wheel power is recovered scaled by efficiency and
    the speed-dependent regen fraction. The result is clamped to the pack
    limit and the motor limit.
    """
    if v < 0:
        raise ValueError("speed must be non-negative")
    m = veh.mass
    force = (
        m * a
        + m * G * math.sin(grade)
        + 0.5 * veh.air_density * veh.drag_area * v * v
        + veh.c_rr * m * G * math.cos(grade)
    )
    p_w = force * v
    if p_w >= 0:
        p = p_w / veh.driveline_eff + veh.aux_power
    else:
        p = p_w * veh.driveline_eff * float(veh.regen_fraction(v)) + veh.aux_power
    hi = min(veh.motor_power_limit / veh.driveline_eff + veh.aux_power, pack_power_limit)
    lo = -pack_power_limit
    return min(max(p, lo), hi)


def generate_drive_cycle(seed: int, duration: int = 1800) -> DriveCycle:
    """Synthesize a plausible urban/suburban cycle, deterministic per seed.

    The speed trace alternates idle / accelerate / cruise / brake segments
    with accelerations inside [-3, 2] m/s^2 and speeds inside [0, 35] m/s.
    Grade is a smooth sum of three incommensurate sinusoids bounded by
    +-0.06 rad.
    """
    if duration < 60:
        raise ValueError("duration must be >= 60 s")
    rng = np.random.Generator(np.random.PCG64(seed))
    v = 0.0
    v_max = 21.0  # keeps sustained power inside the plausibility band
    speeds = []
    state = "idle"
    target = 0.0
    while len(speeds) < duration:
        if state == "idle":
            hold = int(rng.integers(5, 30))
            speeds.extend([0.0] * hold)
            v = 0.0
            state = "accel"
            target = float(rng.uniform(5.0, 20.0))
        elif state == "accel":
            rate = float(rng.uniform(0.4, 1.5))
            while v < target and len(speeds) < duration:
                v = min(v + rate, target, v_max)
                speeds.append(v)
            state = "cruise"
        elif state == "cruise":
            hold = int(rng.integers(20, 120))
            for _ in range(hold):
                if len(speeds) >= duration:
                    break
                v = float(np.clip(v + rng.uniform(-0.5, 0.5), 0.3, v_max))
                speeds.append(v)
            state = "brake" if rng.uniform() < 0.65 else "accel"
            if state == "accel":
                target = float(rng.uniform(min(v + 1.0, 19.0), 20.0))
        else:  # brake
            rate = float(rng.uniform(0.5, 2.5))
            to_stop = rng.uniform() < 0.6
            target = 0.0 if to_stop else float(rng.uniform(1.5, max(v * 0.6, 2.0)))
            while v > target and len(speeds) < duration:
                v = max(v - rate, target)
                speeds.append(v)
            state = "idle" if v <= 0.0 else "accel"
            if state == "accel":
                target = float(rng.uniform(min(v + 1.0, 19.0), 20.0))
    speed = np.asarray(speeds[:duration])

    t = np.arange(duration, dtype=float)
    periods = rng.uniform(200.0, 900.0, size=3)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=3)
    grade = 0.015 * (
        0.5 * np.sin(2 * math.pi * t / periods[0] + phases[0])
        + 0.3 * np.sin(2 * math.pi * t / periods[1] + phases[1])
        + 0.2 * np.sin(2 * math.pi * t / periods[2] + phases[2])
    )
    return DriveCycle(speed=speed, grade=grade, duration=duration)


def simulate_trip(
    cycle: DriveCycle,
    veh: VehicleParams,
    bat: BatteryParams,
    soc0: float = 0.9,
    vehicle_id: str = "v01",
) -> TripRecord:
    """Chain road load -> cell current -> cell dynamics over a drive cycle.

    The current at step t is computed against the previous step's terminal
    voltage (one-step lag breaks the I/V_bc circularity); the first step uses
    the rested open-circuit voltage. Per-second pack energy is
    n_bc * dJ / 3600 Wh, so the energy column sums to the final cell energy
    integral scaled to the pack.
    """
    if not 0.0 < soc0 <= 1.0:
        raise ValueError("soc0 must lie in (0,1]")
    n = cycle.duration
    speed = cycle.speed
    accel = np.empty(n)
    accel[0] = 0.0
    accel[1:] = np.diff(speed) / cycle.dt
    distance = np.cumsum(speed * cycle.dt)

    state = BatteryCellState(soc=soc0)
    v_bc_prev = float(bat.voc_table(soc0))  # rested cell: no load, no transient
    power = np.empty(n)
    current = np.empty(n)
    soc_col = np.empty(n)
    v_col = np.empty(n)
    energy = np.empty(n)
    j_col = np.empty(n)
    power_clamps = 0
    strings = bat.n_bc / bat.series_count
    hi = min(veh.motor_power_limit / veh.driveline_eff + veh.aux_power, bat.pack_power_limit)
    for t in range(n):
        p = road_load_power(
            float(speed[t]), float(accel[t]), float(cycle.grade[t]), veh,
            pack_power_limit=bat.pack_power_limit,
        )
        if p == hi or p == -bat.pack_power_limit:
            power_clamps += 1
        i = cell_current(p, bat.n_bc, v_bc_prev)
        j_before = state.j_cell
        state, v_bc = step_cell(state, bat, i, cycle.dt)
        power[t] = p
        current[t] = strings * i
        soc_col[t] = state.soc
        v_col[t] = v_bc
        energy[t] = bat.n_bc * (state.j_cell - j_before) / 3600.0
        j_col[t] = state.j_cell
        v_bc_prev = v_bc

    return TripRecord(
        vehicle_id=vehicle_id,
        time=np.arange(n, dtype=float),
        speed=speed.copy(),
        accel=accel,
        distance=distance,
        energy_wh=energy,
        extras={
            "batt_power_w": power,
            "pack_current_a": current,
            "soc": soc_col,
            "cell_voltage_v": v_col,
            "grade_rad": cycle.grade.copy(),
            "cell_energy_j": j_col,
        },
        soc_clamp_events=state.clamp_events,
        power_clamp_events=power_clamps,
    )


def generate_fleet(
    seed: int,
    n_vehicles: int = 10,
    veh: VehicleParams | None = None,
    bat: BatteryParams | None = None,
    duration: int = 1800,
    soc0: float = 0.9,
) -> list[TripRecord]:
    """One trip per vehicle, each from its own derived cycle seed."""
    veh = veh or VehicleParams()
    bat = bat or BatteryParams()
    fleet = []
    for i in range(1, n_vehicles + 1):
        cycle = generate_drive_cycle(derive_seed(seed, "vehicle", i, "cycle"), duration)
        fleet.append(simulate_trip(cycle, veh, bat, soc0, vehicle_id=f"v{i:02d}"))
    return fleet
