"""Highway traffic: synthetic placement and mobility, plus NGSIM-style trace
ingestion and the speed-stability statistics computed from it.

Every quantity leaving this module is SI (meters, seconds, m/s). Trace
ingestion is the only place where unit conversion happens.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, TextIO, Tuple

import numpy as np

log = logging.getLogger(__name__)

FOOT = 0.3048
KMH = 1.0 / 3.6
# sanity bound for highway traces after conversion
MAX_HIGHWAY_SPEED = 70.0


class VehicleClass(enum.IntEnum):
    COMPACT = 1
    MIDSIZE = 2
    LARGE = 3


ETA_MAX = int(max(VehicleClass))


@dataclass(frozen=True)
class HeightModel:
    """Normal fit of vehicle body height (meters)."""

    mean: float
    std: float

    def __post_init__(self):
        if self.mean <= 0 or self.std < 0:
            raise ValueError(f"invalid height model {self}")

    def sample(self, rng: np.random.Generator, size=None):
        # heights stay physical even in the far tail
        return np.maximum(rng.normal(self.mean, self.std, size), 0.5 * self.mean)


HEIGHTS: Dict[VehicleClass, HeightModel] = {
    VehicleClass.COMPACT: HeightModel(1.5, 0.084),
    VehicleClass.MIDSIZE: HeightModel(2.0, 0.084),
    VehicleClass.LARGE: HeightModel(3.35, 0.084),
}


@dataclass(frozen=True)
class VehicleState:
    id: int
    vclass: VehicleClass
    x: float
    speed: float
    body_height: float
    lane: int = 0
    direction: int = 1
    mean_speed: float = 0.0
    antenna_offset: float = 0.0
    sv_flag: bool = False

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"vehicle {self.id}: negative speed {self.speed}")
        if self.direction not in (1, -1):
            raise ValueError(f"vehicle {self.id}: direction must be +1 or -1")
        if not (0 <= self.antenna_offset < self.body_height):
            raise ValueError(f"vehicle {self.id}: antenna offset outside [0, body height)")

    @property
    def eta(self) -> int:
        return int(self.vclass)

    @property
    def antenna_height(self) -> float:
        return self.body_height + self.antenna_offset

    @property
    def velocity(self) -> float:
        """Signed speed along the road axis."""
        return self.direction * self.speed


@dataclass(frozen=True)
class SpeedLaw:
    """Per-vehicle mean speed ~ U[mean_low, mean_high]; per-step speed ~
    Normal(mean, std). All in m/s."""

    mean_low: float
    mean_high: float
    std: float

    @classmethod
    def from_kmh(cls, low, high, std):
        return cls(low * KMH, high * KMH, std * KMH)


DEFAULT_SPEED_LAWS = {
    VehicleClass.COMPACT: SpeedLaw.from_kmh(20, 40, 13),
    VehicleClass.MIDSIZE: SpeedLaw.from_kmh(20, 40, 13),
    VehicleClass.LARGE: SpeedLaw.from_kmh(20, 30, 9),
}

# PDR test mixes in percent, ordered (large, mid-size, compact); class 1 sums
# to 99.9 % and is renormalised.
PDR_CLASS_MIXES = {
    1: (2.7, 34.7, 62.5),
    2: (5.4, 34.7, 59.9),
    3: (10.8, 34.7, 54.5),
}


def class_mix_from_percent(large, mid, compact) -> Tuple[float, float, float]:
    """Return a (compact, mid, large) fraction triple normalised to 1."""
    total = large + mid + compact
    return (compact / total, mid / total, large / total)


@dataclass
class TrafficConfig:
    density: float = 0.05  # veh/m
    road_length: float = 4000.0
    class_mix: Tuple[float, float, float] = class_mix_from_percent(*PDR_CLASS_MIXES[2])
    speed_laws: Dict[VehicleClass, SpeedLaw] = field(default_factory=lambda: dict(DEFAULT_SPEED_LAWS))
    heights: Dict[VehicleClass, HeightModel] = field(default_factory=lambda: dict(HEIGHTS))
    n_lanes: int = 3
    lane_width: float = 3.5
    max_vehicles: int = 1000
    antenna_offset: float = 0.0
    backward_fraction: float = 0.0

    def __post_init__(self):
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.road_length <= 0:
            raise ValueError("road_length must be positive")
        mix = tuple(float(f) for f in self.class_mix)
        if len(mix) != 3 or any(f < 0 or f > 1 for f in mix) or abs(sum(mix) - 1) > 1e-9:
            raise ValueError(f"class_mix must be three fractions summing to 1, got {mix}")
        self.class_mix = mix
        if not 0 <= self.backward_fraction <= 1:
            raise ValueError("backward_fraction must lie in [0, 1]")


def _new_vehicle(vid, config: TrafficConfig, rng: np.random.Generator, x=None) -> VehicleState:
    vclass = VehicleClass(int(rng.choice(3, p=config.class_mix)) + 1)
    law = config.speed_laws[vclass]
    mean = rng.uniform(law.mean_low, law.mean_high)
    speed = max(rng.normal(mean, law.std), 0.0)
    if x is None:
        x = rng.uniform(0.0, config.road_length)
    direction = -1 if rng.random() < config.backward_fraction else 1
    lane = int(rng.integers(config.n_lanes))
    body = float(config.heights[vclass].sample(rng))
    return VehicleState(
        id=int(vid), vclass=vclass, x=float(x), speed=float(speed), body_height=body,
        lane=lane, direction=direction, mean_speed=float(mean),
        antenna_offset=config.antenna_offset,
    )


def spawn_synthetic(config: TrafficConfig, seed) -> List[VehicleState]:
    """Place a Poisson number of vehicles uniformly on the segment.

    `seed` may be an int, a SeedSequence or a Generator. The result is sorted
    by position and ids are assigned in that order.
    """
    rng = np.random.default_rng(seed)
    count = min(int(rng.poisson(config.density * config.road_length)), config.max_vehicles)
    xs = np.sort(rng.uniform(0.0, config.road_length, count))
    return [_new_vehicle(i, config, rng, x) for i, x in enumerate(xs)]


def step_mobility(states: Sequence[VehicleState], dt: float, rng: np.random.Generator,
                  config: TrafficConfig) -> List[VehicleState]:
    """Advance one mobility tick.

    Speeds are redrawn around each vehicle's own mean, clipped at zero, and
    positions advance by speed*dt. A vehicle that leaves the segment is
    despawned and a fresh vehicle (new id and attributes) enters at the
    opposite edge carrying the overshoot, so the expected density is kept.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    next_id = max((s.id for s in states), default=-1) + 1
    out = []
    for s in states:
        law = config.speed_laws[s.vclass]
        speed = max(float(rng.normal(s.mean_speed, law.std)), 0.0) if law.std > 0 else s.mean_speed
        x = s.x + s.direction * speed * dt
        if 0.0 <= x <= config.road_length:
            out.append(replace(s, x=x, speed=speed))
            continue
        entry = x - config.road_length if x > config.road_length else x + config.road_length
        fresh = _new_vehicle(next_id, config, rng, x=entry)
        next_id += 1
        out.append(replace(fresh, direction=s.direction))
    return out


# --------------------------------------------------------------------------
# Trace ingestion


@dataclass(frozen=True)
class TraceRecord:
    vehicle_id: int
    frame_time: float
    position_x: float
    position_y: float
    speed: float
    vehicle_class: VehicleClass


# NGSIM v_Class: 1 motorcycle, 2 auto, 3 truck
NGSIM_CLASS_MAP = {1: VehicleClass.COMPACT, 2: VehicleClass.MIDSIZE, 3: VehicleClass.LARGE}


@dataclass(frozen=True)
class ColumnMap:
    vehicle_id: str = "Vehicle_ID"
    frame: str = "Frame_ID"
    x: str = "Local_X"
    y: str = "Local_Y"
    velocity: str = "v_Vel"
    vehicle_class: str = "v_Class"
    frame_period: float = 0.1  # seconds per frame
    length_scale: float = FOOT  # source length unit -> meters
    class_map: Dict[int, VehicleClass] = field(default_factory=lambda: dict(NGSIM_CLASS_MAP))

    def names(self):
        return (self.vehicle_id, self.frame, self.x, self.y, self.velocity, self.vehicle_class)


class ParsedTrace(NamedTuple):
    records: List[TraceRecord]
    skipped: int
    bad_rows: List[int]


class TraceFormatError(ValueError):
    pass


def parse_trace(stream: TextIO, columns: ColumnMap = ColumnMap(), delimiter: str = ",") -> ParsedTrace:
    """Read a delimiter-separated trajectory file with a header row.

    Rows with an unparseable cell or an unknown class code are skipped and
    their 1-based line numbers collected; a missing mapped column is fatal.
    """
    reader = csv.reader(stream, delimiter=delimiter, skipinitialspace=True)
    header = next(reader, None)
    if header is None:
        return ParsedTrace([], 0, [])
    header = [h.strip() for h in header]
    missing = [c for c in columns.names() if c not in header]
    if missing:
        raise TraceFormatError(f"trace header lacks mapped column(s): {', '.join(missing)}")
    idx = [header.index(c) for c in columns.names()]

    records, bad = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vid, frame, x, y, vel, code = (row[i] for i in idx)
            vclass = columns.class_map[int(float(code))]
            rec = TraceRecord(
                vehicle_id=int(float(vid)),
                frame_time=float(frame) * columns.frame_period,
                position_x=float(x) * columns.length_scale,
                position_y=float(y) * columns.length_scale,
                speed=float(vel) * columns.length_scale,
                vehicle_class=vclass,
            )
        except (ValueError, IndexError, KeyError):
            bad.append(lineno)
            continue
        if not (math.isfinite(rec.speed) and math.isfinite(rec.frame_time)) or rec.speed < 0:
            bad.append(lineno)
            continue
        if rec.speed > MAX_HIGHWAY_SPEED:
            log.warning("line %d: speed %.1f m/s exceeds highway bound; check unit scale", lineno, rec.speed)
        records.append(rec)
    if bad:
        log.info("skipped %d malformed trace rows", len(bad))
    return ParsedTrace(records, len(bad), bad)


def _speeds_by_vehicle(records: Iterable[TraceRecord]):
    speeds = defaultdict(list)
    classes = {}
    for r in records:
        speeds[r.vehicle_id].append(r.speed)
        classes[r.vehicle_id] = r.vehicle_class
    return speeds, classes


def speed_std_per_vehicle(records: Iterable[TraceRecord]) -> Dict[int, float]:
    """Population standard deviation of each vehicle's speed samples.

    Vehicles with fewer than two samples are left out.
    """
    speeds, _ = _speeds_by_vehicle(records)
    # sorting makes the float sum independent of record order
    return {vid: float(np.std(sorted(v))) for vid, v in speeds.items() if len(v) >= 2}


def share_below(records: Sequence[TraceRecord], threshold: float) -> Dict[VehicleClass, float]:
    """Fraction of vehicles of each class whose speed std is below `threshold` (m/s)."""
    stds = speed_std_per_vehicle(records)
    _, classes = _speeds_by_vehicle(records)
    out = {}
    for vclass in VehicleClass:
        vals = [s for vid, s in stds.items() if classes[vid] == vclass]
        if vals:
            out[vclass] = sum(v < threshold for v in vals) / len(vals)
    return out


def mean_speed_per_vehicle(records: Iterable[TraceRecord]) -> Dict[int, Tuple[VehicleClass, float]]:
    speeds, classes = _speeds_by_vehicle(records)
    return {vid: (classes[vid], float(np.mean(v))) for vid, v in speeds.items()}


class WindowStat(NamedTuple):
    window_start: float
    truck_fraction: Optional[float]
    truck_density_per_km: Optional[float]


def class_share_and_density(records: Sequence[TraceRecord], window: float,
                            segment_length: float) -> List[WindowStat]:
    """Truck share and truck linear density per time window.

    Each frame contributes its share of Large vehicles and its truck count
    per km of study segment; a window reports the mean over its frames.
    Windows without samples are gaps (None fields).
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if segment_length <= 0:
        raise ValueError("segment_length must be positive")
    if not records:
        return []
    frames = defaultdict(lambda: [0, 0])
    for r in records:
        cell = frames[r.frame_time]
        cell[0] += 1
        cell[1] += r.vehicle_class == VehicleClass.LARGE
    t0 = min(frames)
    per_window = defaultdict(list)
    for t, (total, trucks) in frames.items():
        per_window[int((t - t0) // window)].append((trucks / total, trucks / (segment_length / 1000.0)))
    out = []
    for k in range(max(per_window) + 1):
        start = t0 + k * window
        rows = per_window.get(k)
        if not rows:
            out.append(WindowStat(start, None, None))
            continue
        fr, dens = zip(*rows)
        out.append(WindowStat(start, float(np.mean(fr)), float(np.mean(dens))))
    return out


def write_window_stats(path, stats: Iterable[WindowStat]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_start_s", "truck_fraction", "truck_density_per_km"])
        for s in stats:
            w.writerow([
                f"{s.window_start:.3f}",
                "" if s.truck_fraction is None else f"{s.truck_fraction:.6f}",
                "" if s.truck_density_per_km is None else f"{s.truck_density_per_km:.6f}",
            ])
