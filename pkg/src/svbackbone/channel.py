"""V2V radio channel: two-ray LOS propagation, knife-edge diffraction by
vehicles, log-normal small-scale deviation and the DSRC power->rate table.
"""

from __future__ import annotations

import bisect
import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

C_LIGHT = 2.998e8
DSRC_FREQUENCY = 5.9e9
# below this separation the knife-edge geometry is clamped
MIN_OLOS_DISTANCE = 10.0

# (threshold dBm, rate Mbps), ascending threshold
DEFAULT_RATE_TABLE: Tuple[Tuple[float, float], ...] = (
    (-85.0, 3.0), (-84.0, 4.5), (-82.0, 6.0), (-80.0, 9.0),
    (-77.0, 12.0), (-70.0, 18.0), (-69.0, 24.0), (-67.0, 27.0),
)


@dataclass(frozen=True)
class LinkGeometry:
    tx_x: float
    rx_x: float
    tx_h: float
    rx_h: float
    tx_y: float = 0.0
    rx_y: float = 0.0
    frequency: float = DSRC_FREQUENCY

    @property
    def distance(self) -> float:
        return math.hypot(self.rx_x - self.tx_x, self.rx_y - self.tx_y)

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.frequency

    def los_height(self, d1: float) -> float:
        """Height of the Tx-Rx line at horizontal distance d1 from Tx."""
        return self.tx_h + (self.rx_h - self.tx_h) * d1 / self.distance


class Obstacle(NamedTuple):
    d1: float  # horizontal distance from Tx
    top: float  # absolute height of the obstacle top


@dataclass(frozen=True)
class ObstacleProfile:
    obstacles: Tuple[Obstacle, ...]

    def __post_init__(self):
        obs = tuple(sorted(Obstacle(float(d), float(h)) for d, h in self.obstacles))
        object.__setattr__(self, "obstacles", obs)

    def __len__(self):
        return len(self.obstacles)

    def excess_heights(self, geometry: LinkGeometry) -> List[float]:
        return [o.top - geometry.los_height(o.d1) for o in self.obstacles]

    def validate(self, geometry: LinkGeometry):
        d = geometry.distance
        for o in self.obstacles:
            if not 0 < o.d1 < d:
                raise ValueError(f"obstacle at {o.d1} m is not strictly between Tx and Rx (d={d})")


@dataclass(frozen=True)
class FadingEnvironment:
    sigma_min: float = 2.0
    sigma_max: float = 5.3
    nv: float = 0.0
    nv_max: float = 0.25  # vehicles per meter of road within range

    def __post_init__(self):
        if not 0 <= self.sigma_min <= self.sigma_max:
            raise ValueError("need 0 <= sigma_min <= sigma_max")
        if self.nv < 0:
            raise ValueError("nv must be non-negative")


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 23.0
    gain_t: float = 1.0
    gain_r: float = 1.0
    ref_distance: float = 1.0
    ref_field: Optional[float] = None  # V/m at ref_distance; derived when None

    def __post_init__(self):
        if self.gain_t <= 0 or self.gain_r <= 0:
            raise ValueError("antenna gains must be positive")

    @property
    def tx_power_w(self) -> float:
        return 1e-3 * 10 ** (self.tx_power_dbm / 10)

    @property
    def e0(self) -> float:
        if self.ref_field is not None:
            return self.ref_field
        # free-space field of an isotropic-equivalent source at d0
        return math.sqrt(30.0 * self.tx_power_w * self.gain_t) / self.ref_distance


def diffraction_parameter(h: float, d1: float, d2: float, wavelength: float) -> float:
    """Fresnel-Kirchhoff parameter of a knife edge with excess height h."""
    if d1 <= 0 or d2 <= 0 or wavelength <= 0:
        raise ValueError("d1, d2 and wavelength must be positive")
    return h * math.sqrt(2.0 * (d1 + d2) / (wavelength * d1 * d2))


def knife_edge_loss_db(v: float) -> float:
    """Additional attenuation (dB) of a single knife edge.

    The formula is returned as is; it dips slightly below zero just above
    the v = -0.7 breakpoint.
    """
    if v <= -0.7:
        return 0.0
    return 6.9 + 20.0 * math.log10(math.sqrt((v - 0.1) ** 2 + 1.0) + v - 0.1)


def equivalent_height(profile: ObstacleProfile, geometry: LinkGeometry) -> Tuple[float, float]:
    """Reduce an obstacle profile to one knife edge (excess height, d1).

    Bullington construction: the steepest ray from Tx over the obstacle tops
    and the steepest ray from Rx meet at the equivalent edge. When every top
    is below the LOS line the two rays do not meet in front of the path, and
    the obstacle with the largest diffraction parameter is used instead.
    """
    if len(profile) == 0:
        raise ValueError("empty obstacle profile")
    profile.validate(geometry)
    d = geometry.distance
    if len(profile) == 1:
        o = profile.obstacles[0]
        return o.top - geometry.los_height(o.d1), o.d1

    s_tx = max((o.top - geometry.tx_h) / o.d1 for o in profile.obstacles)
    s_rx = max((o.top - geometry.rx_h) / (d - o.d1) for o in profile.obstacles)
    los_slope = (geometry.rx_h - geometry.tx_h) / d
    if s_tx <= los_slope:
        lam = geometry.wavelength
        best = max(
            profile.obstacles,
            key=lambda o: diffraction_parameter(o.top - geometry.los_height(o.d1), o.d1, d - o.d1, lam),
        )
        return best.top - geometry.los_height(best.d1), best.d1
    x = (geometry.rx_h - geometry.tx_h + s_rx * d) / (s_tx + s_rx)
    x = min(max(x, 1e-9 * d), d * (1 - 1e-9))
    y = geometry.tx_h + s_tx * x
    return y - geometry.los_height(x), x


def two_ray_power(geometry: LinkGeometry, radio: RadioParams, t: float = 0.0) -> float:
    """Received power (W) of the direct plus ground-reflected ray.

    Uses the envelope of the summed carrier field (reflection coefficient
    -1), so the result does not depend on `t`.
    """
    d = geometry.distance
    if d <= 0:
        raise ValueError("zero Tx-Rx separation")
    lam = geometry.wavelength
    d_los = math.hypot(d, geometry.tx_h - geometry.rx_h)
    d_ref = math.hypot(d, geometry.tx_h + geometry.rx_h)
    phase = 2.0 * math.pi * (d_ref - d_los) / lam
    e0d0 = radio.e0 * radio.ref_distance
    envelope = e0d0 * abs(1.0 / d_los - cmath.exp(-1j * phase) / d_ref)
    return envelope ** 2 * radio.gain_r * lam ** 2 / (480.0 * math.pi ** 2)


def crossover_distance(h_t: float, h_r: float, wavelength: float = C_LIGHT / DSRC_FREQUENCY) -> float:
    return 4.0 * h_t * h_r / wavelength


def small_scale_sigma(env: FadingEnvironment) -> float:
    """Standard deviation (dB) of the zero-mean normal deviation."""
    if env.nv_max <= 0:
        raise ValueError("nv_max must be positive")
    nv = env.nv
    if nv > env.nv_max:
        warnings.warn(f"NV={nv:g} exceeds NV_max={env.nv_max:g}; clamped", RuntimeWarning, stacklevel=2)
        nv = env.nv_max
    # static-obstruction term is zero on highways
    return env.sigma_min + (env.sigma_max - env.sigma_min) / 2.0 * math.sqrt(nv / env.nv_max)


def watts_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p / 1e-3) if p > 0 else -math.inf


def olos_loss_db(profile: ObstacleProfile, geometry: LinkGeometry,
                 min_distance: float = MIN_OLOS_DISTANCE) -> float:
    d = geometry.distance
    if d < min_distance:
        # the knife-edge model is not trusted at short range
        k = min_distance / d
        geometry = LinkGeometry(0.0, min_distance, geometry.tx_h, geometry.rx_h,
                                frequency=geometry.frequency)
        profile = ObstacleProfile(tuple(Obstacle(o.d1 * k, o.top) for o in profile.obstacles))
        d = min_distance
    h_eq, d1 = equivalent_height(profile, geometry)
    v = diffraction_parameter(h_eq, d1, d - d1, geometry.wavelength)
    return knife_edge_loss_db(v)


def received_power_dbm(geometry: LinkGeometry, radio: RadioParams = RadioParams(),
                       profile: Optional[ObstacleProfile] = None,
                       env: Optional[FadingEnvironment] = None,
                       rng: Optional[np.random.Generator] = None) -> float:
    """Total received power in dBm.

    LOS when `profile` is None or empty, otherwise the diffraction loss of the
    equivalent edge is subtracted. A normal deviation is added only when both
    `env` and `rng` are given; without them the result is the deterministic
    mean.
    """
    p = watts_to_dbm(two_ray_power(geometry, radio))
    if profile is not None and len(profile):
        p -= olos_loss_db(profile, geometry)
    if rng is not None and env is not None:
        p += rng.normal(0.0, small_scale_sigma(env))
    return p


def rate_from_power(p_dbm: float, table: Sequence[Tuple[float, float]] = DEFAULT_RATE_TABLE) -> float:
    """Highest rate (Mbps) whose sensitivity threshold is met; 0 means no link."""
    thresholds = [t for t, _ in table]
    i = bisect.bisect_right(thresholds, p_dbm)
    return 0.0 if i == 0 else table[i - 1][1]


def threshold_for_rate(rate_mbps: float, table: Sequence[Tuple[float, float]] = DEFAULT_RATE_TABLE) -> float:
    for t, r in table:
        if r == rate_mbps:
            return t
    raise KeyError(f"no threshold for {rate_mbps} Mbps")


def rate_distribution(mean_dbm: float, sigma: float,
                      table: Sequence[Tuple[float, float]] = DEFAULT_RATE_TABLE):
    """Probability of each table rate (and of 0 = no link) when the received
    power is Normal(mean_dbm, sigma). Returns a list of (rate, prob)."""
    from scipy.stats import norm

    edges = [t for t, _ in table]
    rates = [0.0] + [r for _, r in table]
    if sigma <= 0:
        r = rate_from_power(mean_dbm, table)
        return [(x, 1.0 if x == r else 0.0) for x in rates]
    cdf = [0.0] + [float(norm.cdf((e - mean_dbm) / sigma)) for e in edges] + [1.0]
    return [(rates[i], cdf[i + 1] - cdf[i]) for i in range(len(rates))]


# --------------------------------------------------------------------------
# Link classification from vehicle positions


class LinkClass(NamedTuple):
    los: bool
    profile: Optional[ObstacleProfile]
    geometry: LinkGeometry


def vehicle_geometry(tx, rx, lane_width: float = 3.5, frequency: float = DSRC_FREQUENCY) -> LinkGeometry:
    return LinkGeometry(tx.x, rx.x, tx.antenna_height, rx.antenna_height,
                        tx.lane * lane_width, rx.lane * lane_width, frequency)


def classify_link(tx, rx, vehicles: Iterable, lane_width: float = 3.5,
                  corridor_half_width: Optional[float] = None) -> LinkClass:
    """Decide LOS/OLOS for the tx->rx link among `vehicles`.

    A vehicle obstructs when it lies strictly between the two ends along the
    road, its lateral offset from the Tx-Rx line is within the corridor
    (default one lane width, i.e. same or adjacent lane) and its body top is
    above the LOS line at its abscissa.
    """
    if tx.id == rx.id:
        raise ValueError("tx and rx must differ")
    if corridor_half_width is None:
        corridor_half_width = lane_width
    geom = vehicle_geometry(tx, rx, lane_width)
    lo, hi = sorted((tx.x, rx.x))
    dx = rx.x - tx.x
    d = geom.distance
    obstacles = []
    for v in vehicles:
        if v.id in (tx.id, rx.id) or not (lo < v.x < hi):
            continue
        frac = (v.x - tx.x) / dx
        y_line = geom.tx_y + frac * (geom.rx_y - geom.tx_y)
        if abs(v.lane * lane_width - y_line) > corridor_half_width:
            continue
        d1 = frac * d
        if v.body_height > geom.los_height(d1):
            obstacles.append(Obstacle(d1, v.body_height))
    if not obstacles:
        return LinkClass(True, None, geom)
    return LinkClass(False, ObstacleProfile(tuple(obstacles)), geom)


def attenuation_sweep(distances: Iterable[float], auto_height: float = 1.5,
                      truck_height: float = 3.35, antenna_height: float = 1.5,
                      frequency: float = DSRC_FREQUENCY):
    """Added loss of a single midway obstacle between two cars, for a car and a
    truck obstacle. Yields (distance, loss_auto_db, loss_truck_db)."""
    for d in distances:
        geom = LinkGeometry(0.0, float(d), antenna_height, antenna_height, frequency=frequency)
        mid = d / 2.0
        auto = olos_loss_db(ObstacleProfile(((mid, auto_height),)), geom)
        truck = olos_loss_db(ObstacleProfile(((mid, truck_height),)), geom)
        yield float(d), auto, truck
