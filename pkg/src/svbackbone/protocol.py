"""Two-tier backbone protocol: stable-vehicle election by stability index,
chain bootstrap, beacon-driven maintenance and next-hop forwarding.

All functions work on snapshots (beacons or vehicle states); the simulator
drives them from its event loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .traffic import ETA_MAX, VehicleState

# speed floor (m/s) for the relative-speed term when the computing vehicle stands still
MIN_SPEED = 1.0
BEACON_CLASSES = ((0.2, 500), (0.4, 400), (0.6, 300), (0.8, 200), (math.inf, 100))


class BootstrapFailed(RuntimeError):
    pass


class NoLinkError(ValueError):
    pass


@dataclass(frozen=True)
class StabilityWeights:
    alpha: float = 0.7
    beta: float = 0.3

    def __post_init__(self):
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise ValueError("weights must lie in [0, 1]")
        if abs(self.alpha + self.beta - 1) > 1e-9:
            raise ValueError("weights must sum to 1")

    @classmethod
    def from_alpha(cls, alpha: float) -> "StabilityWeights":
        return cls(alpha, 1.0 - alpha)


BASELINE_WEIGHTS = StabilityWeights(1.0, 0.0)


@dataclass(frozen=True)
class Beacon:
    id: int
    x: float
    y: float
    speed: float
    direction: int
    eta: int
    sv_flag: bool = False
    requesting: bool = False
    timestamp: float = 0.0
    maintenance_class: int = 1

    @classmethod
    def from_vehicle(cls, v: VehicleState, t: float = 0.0, lane_width: float = 3.5,
                     requesting: bool = False, maintenance_class: int = 1) -> "Beacon":
        return cls(v.id, v.x, v.lane * lane_width, v.speed, v.direction, v.eta,
                   v.sv_flag, requesting, t, maintenance_class)


def _dist(a, b) -> float:
    return math.hypot(a.x - b.x, getattr(a, "y", 0.0) - getattr(b, "y", 0.0))


class LinkEstimate(NamedTuple):
    link_duration: float
    data_rate: float  # bits/s
    volume: float  # bits


def stability_index(own, neighbor, weights: StabilityWeights, eta_max: int = ETA_MAX) -> float:
    """Stability index of `neighbor` as seen by `own` (lower is better).

    The relative-speed term divides by the computing vehicle's speed, floored
    at MIN_SPEED so that a standing vehicle still yields a finite index.
    """
    vs = own.speed if own.speed > 0 else MIN_SPEED
    return weights.alpha * abs(own.speed - neighbor.speed) / vs + weights.beta * (eta_max - neighbor.eta) / eta_max


def _ld(a, b, d_trans, horizon=math.inf):
    dv = abs(a.speed - b.speed)
    gap = d_trans - _dist(a, b)
    return horizon if dv == 0 else gap / dv


def link_duration(d_trans: float, distance: float, v_s: float, v_i: float, horizon: float = 90.0) -> float:
    if distance > d_trans:
        raise NoLinkError(f"distance {distance:.1f} m beyond range {d_trans:.1f} m")
    dv = abs(v_s - v_i)
    if dv == 0:
        return horizon
    return (d_trans - distance) / dv


def estimated_volume(ld: float, rate: float) -> float:
    if ld < 0 or rate < 0:
        raise ValueError("link duration and rate must be non-negative")
    return ld * rate


def forward_progress(own, other, direction: int) -> float:
    return (other.x - own.x) * direction


def select_sv(own, neighbors: Iterable, weights: StabilityWeights, d_trans: float = 300.0,
              direction: Optional[int] = None, exclude: Iterable[int] = ()) -> Optional[int]:
    """Pick the forward neighbour with the lowest stability index.

    Candidates travel in the same direction as `own`, are ahead of it along
    `direction` and within `d_trans`. Ties go to the larger vehicle class,
    then the greater forward progress, then the smaller id.
    """
    direction = own.direction if direction is None else direction
    skip = set(exclude)
    skip.add(own.id)
    best, best_key = None, None
    for nb in neighbors:
        if nb.id in skip or nb.direction != own.direction:
            continue
        prog = forward_progress(own, nb, direction)
        if prog <= 0 or _dist(own, nb) > d_trans:
            continue
        key = (stability_index(own, nb, weights), -nb.eta, -prog, nb.id)
        if best_key is None or key < best_key:
            best, best_key = nb.id, key
    return best


def requesting_index(phi: int, big_phi: int) -> float:
    if big_phi <= 0:
        return 0.0
    if not 0 <= phi <= big_phi:
        raise ValueError("need 0 <= phi <= Phi")
    return phi / big_phi


def maintenance_class(ri: float) -> int:
    for k, (upper, _) in enumerate(BEACON_CLASSES, start=1):
        if ri < upper:
            return k
    return len(BEACON_CLASSES)


def beacon_period(ri: float) -> int:
    """Beacon period in milliseconds for a requesting index (RI = 1 joins the top class)."""
    return BEACON_CLASSES[maintenance_class(ri) - 1][1]


class ProtocolEvent(NamedTuple):
    time: float
    node: int
    kind: str  # ELECT | REPLACE | BREAK | CLASS_CHANGE
    detail: str

    def line(self) -> str:
        return f"{self.time:.3f},{self.node},{self.kind},{self.detail}"


@dataclass
class BackboneState:
    chain: List[int] = field(default_factory=list)
    direction: int = 1
    destination: Optional[int] = None
    neighbor_tables: Dict[int, Dict[int, Beacon]] = field(default_factory=dict)
    classes: Dict[int, int] = field(default_factory=dict)
    broken: set = field(default_factory=set)  # upstream chain ids whose downstream link is down
    retired: List[int] = field(default_factory=list)  # replaced SVs that may still hold packets
    events: List[ProtocolEvent] = field(default_factory=list)

    def index(self, node: int) -> Optional[int]:
        try:
            return self.chain.index(node)
        except ValueError:
            return None

    def period(self, sv: int) -> float:
        return BEACON_CLASSES[self.classes.get(sv, 1) - 1][1] / 1000.0


def _in_range(snapshot: Dict[int, object], a: int, b: int, d_trans: float) -> bool:
    return a in snapshot and b in snapshot and _dist(snapshot[a], snapshot[b]) <= d_trans


def bootstrap_backbone(vehicles: Sequence[VehicleState], source: int, weights: StabilityWeights,
                       d_trans: float = 300.0, destination: Optional[int] = None,
                       max_svs: Optional[int] = None, backbone: Optional[BackboneState] = None,
                       now: float = 0.0, lane_width: float = 3.5) -> BackboneState:
    """Build (or attach to) the backbone for a requesting vehicle.

    Returns the existing backbone untouched when the destination is in the
    source's range or an SV already is; otherwise elects SVs one hop at a time
    towards the destination until it is in range of the chain head, the
    optional `max_svs` is reached or no candidate remains. When a backbone
    exists, election stops as soon as a new SV reaches one of its SVs and the
    new segment is spliced in front of the furthest reachable one; bypassed
    SVs are retired.
    """
    snap = {v.id: Beacon.from_vehicle(v, now, lane_width) for v in vehicles}
    if source not in snap:
        raise KeyError(f"unknown source {source}")
    src = snap[source]
    if destination is not None:
        direction = 1 if snap[destination].x >= src.x else -1
    else:
        direction = src.direction
    state = backbone if backbone is not None else BackboneState(direction=direction, destination=destination)
    if destination is not None and _in_range(snap, source, destination, d_trans):
        return state
    old_chain = [sv for sv in state.chain if sv in snap]
    existing = set(old_chain) if state.chain else {v.id for v in vehicles if v.sv_flag}
    if any(_in_range(snap, source, sv, d_trans) for sv in existing if sv != source):
        return state

    chain: List[int] = []
    splice = None
    cur = src
    while max_svs is None or len(chain) < max_svs:
        nbrs = [b for b in snap.values() if _dist(cur, b) <= d_trans]
        exclude = set(chain) | {source}
        if destination is not None:
            exclude.add(destination)
        pick = select_sv(cur, nbrs, weights, d_trans, direction, exclude)
        if pick is None:
            break
        if pick in old_chain:
            splice = old_chain.index(pick)
            break
        chain.append(pick)
        state.events.append(ProtocolEvent(now, pick, "ELECT", f"by={cur.id}"))
        cur = snap[pick]
        if destination is not None and _in_range(snap, pick, destination, d_trans):
            break
        reach = [k for k, sv in enumerate(old_chain) if _in_range(snap, pick, sv, d_trans)]
        if reach:
            # join the existing backbone at its furthest reachable SV
            splice = max(reach)
            break
    if not chain:
        raise BootstrapFailed(f"vehicle {source}: no SV candidate in range")
    kept = old_chain[splice:] if splice is not None else []
    state.retired.extend(sv for sv in state.chain if sv not in kept and sv not in chain)
    state.chain = chain + kept
    state.direction = direction
    state.destination = destination
    for sv in chain:
        state.neighbor_tables[sv] = {b.id: b for b in snap.values() if b.id != sv and _dist(snap[sv], b) <= d_trans}
        state.classes.setdefault(sv, 1)
    return state


def mark_svs(vehicles: Sequence[VehicleState], svs: Iterable[int]) -> List[VehicleState]:
    ids = set(svs)
    return [v if v.sv_flag == (v.id in ids) else replace(v, sv_flag=v.id in ids) for v in vehicles]


def maintain(backbone: BackboneState, beacons: Dict[int, Beacon], weights: StabilityWeights, now: float,
             d_trans: float = 300.0, theta_h: float = 0.05, expiry_periods: int = 3,
             extend: bool = True, max_svs: Optional[int] = None,
             lead_time: float = 1.0) -> BackboneState:
    """One maintenance round over the whole chain, applied atomically.

    `beacons` holds the latest beacon of every vehicle; each SV hears those
    within `d_trans` of itself. Walking downstream, each SV refreshes its
    neighbour table and replaces its downstream SV when that SV's entry
    expired, it was not heard this round, it is no longer ahead, its
    predicted link duration drops below `lead_time` seconds (and a candidate
    lasts longer), or a neighbour beats its index by more than `theta_h`.
    Without any candidate a lost downstream link marks the segment broken.
    A head that does not reach the destination is extended.
    """
    chain = list(backbone.chain)
    direction = backbone.direction
    dest = backbone.destination
    events = backbone.events
    tables = {sv: dict(backbone.neighbor_tables.get(sv, {})) for sv in chain}
    classes = dict(backbone.classes)
    broken = set()
    retired = list(backbone.retired)

    def refresh(sv):
        me = beacons[sv]
        table = tables.setdefault(sv, {})
        for b in beacons.values():
            if b.id != sv and _dist(me, b) <= d_trans:
                table[b.id] = b
        period = BEACON_CLASSES[classes.get(sv, 1) - 1][1] / 1000.0
        for nid in [n for n, b in table.items() if now - b.timestamp > expiry_periods * period + 1e-9]:
            del table[nid]
        heard = [b for b in table.values() if b.timestamp == now]
        phi = sum(b.requesting for b in heard)
        k = maintenance_class(requesting_index(phi, len(heard)))
        if classes.get(sv) != k:
            if sv in classes:
                events.append(ProtocolEvent(now, sv, "CLASS_CHANGE", f"{classes[sv]}->{k}"))
            classes[sv] = k
        return me, table

    def fresh_candidates(me, table):
        # positions known from the latest beacons; stale entries are not usable for election
        return [b for b in table.values() if b.timestamp == now]

    # drop SVs that left the simulation entirely
    for sv in [s for s in chain if s not in beacons]:
        events.append(ProtocolEvent(now, sv, "BREAK", "vanished"))
        chain.remove(sv)

    j = 0
    while j < len(chain):
        cur = chain[j]
        me, table = refresh(cur)
        exclude = set(chain[: j + 1])
        if dest is not None:
            exclude.add(dest)
        cands = fresh_candidates(me, table)
        best = select_sv(me, cands, weights, d_trans, direction, exclude)
        if j + 1 < len(chain):
            nxt = chain[j + 1]
            entry = table.get(nxt)
            heard = entry is not None and entry.timestamp == now
            reason = None
            if entry is None:
                reason = "expired"
            elif not heard:
                reason = "lost"
            elif forward_progress(me, entry, direction) <= 0:
                reason = "behind"
            elif lead_time > 0 and link_duration(d_trans, _dist(me, entry), me.speed, entry.speed) < lead_time:
                reason = "fading"
            replace_by = None
            if reason is not None:
                if best is not None and (reason != "fading" or _ld(me, table[best], d_trans)
                                         > _ld(me, entry, d_trans)):
                    replace_by = best
                elif reason != "fading":
                    broken.add(cur)
                    if cur not in backbone.broken:
                        events.append(ProtocolEvent(now, cur, "BREAK", f"{reason}={nxt}"))
            elif best is not None and best != nxt:
                si_best = stability_index(me, table[best], weights)
                si_next = stability_index(me, entry, weights)
                if si_best < si_next - theta_h:
                    replace_by = best
            if replace_by is not None:
                events.append(ProtocolEvent(now, replace_by, "REPLACE", f"old={nxt},by={cur}"))
                if replace_by in chain:
                    k = chain.index(replace_by)
                    dropped = chain[j + 1:k]
                    chain = chain[: j + 1] + chain[k:]
                else:
                    dropped = [nxt]
                    chain = chain[: j + 1] + [replace_by] + chain[j + 2:]
                for sv in dropped:
                    retired.append(sv)
                    tables.pop(sv, None)
                    classes.pop(sv, None)
        elif extend and (max_svs is None or len(chain) < max_svs):
            reach = dest is not None and dest in beacons and _dist(me, beacons[dest]) <= d_trans
            if not reach and best is not None:
                events.append(ProtocolEvent(now, best, "ELECT", f"by={cur}"))
                chain.append(best)
        j += 1

    # tables for newly added SVs are built on the next round; seed them now
    for sv in chain:
        if sv not in tables:
            refresh(sv)
    retired = [r for r in dict.fromkeys(retired) if r not in chain]
    return BackboneState(chain=chain, direction=direction, destination=dest, neighbor_tables=tables,
                         classes=classes, broken=broken, retired=retired, events=events)


class Hop(NamedTuple):
    action: str  # "deliver" | "forward" | "hold"
    target: Optional[int]


def forward_next_hop(dest: int, current: int, backbone: BackboneState, positions: Dict[int, object],
                     d_trans: float = 300.0) -> Hop:
    """Next hop for a packet held by `current` and addressed to `dest`.

    `positions` maps ids to objects with x (and optionally y) attributes.
    """
    if dest in positions and _in_range(positions, current, dest, d_trans):
        return Hop("deliver", dest)
    if dest not in positions:
        return Hop("hold", None)
    me = positions[current]
    j = backbone.index(current)
    if j is None:
        cands = [sv for sv in backbone.chain if sv != current and _in_range(positions, current, sv, d_trans)]
        if not cands:
            return Hop("hold", None)
        return Hop("forward", min(cands, key=lambda sv: (_dist(me, positions[sv]), sv)))
    towards = 1 if (positions[dest].x - me.x) * backbone.direction >= 0 else -1
    k = j + towards
    if not 0 <= k < len(backbone.chain):
        return Hop("hold", None)
    nxt = backbone.chain[k]
    up = current if towards > 0 else nxt
    if up in backbone.broken or not _in_range(positions, current, nxt, d_trans):
        return Hop("hold", None)
    return Hop("forward", nxt)
