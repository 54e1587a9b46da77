"""Discrete-event packet simulator for the two-tier backbone.

One tagged source sends to a destination vehicle roughly `dest_offset`
meters ahead; a random subset of the vehicles in between also requests and
sends to the same destination. Every node is a FIFO server whose per-packet
service time is drawn from a Gamma law around the DCF service rate of the
current link. Positions move once per mobility tick; the backbone is
maintained at the adaptive beacon period.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import channel as ch
from .dcf import DcfParams, service_rate
from .protocol import (BASELINE_WEIGHTS, Beacon, BackboneState, BootstrapFailed, StabilityWeights,
                       bootstrap_backbone, forward_next_hop, maintain, mark_svs)
from .qna import ChainModel, ExternalSource, OverloadError, Station, chain_delay, chain_throughput, solve_chain
from .traffic import (PDR_CLASS_MIXES, SpeedLaw, TrafficConfig, VehicleClass, VehicleState, class_mix_from_percent,
                      spawn_synthetic, step_mobility)

log = logging.getLogger(__name__)

SCHEMES = ("two-tier", "baseline")

# event kinds, ordered only by (time, seq)
MOBILITY, MAINTAIN, GEN, TXEND = range(4)

# entropy tags of the independent random streams
_MOBILITY, _TRAFFIC, _SERVICE, _SHADOW = 1, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    duration: float = 90.0
    network_size: int = 1000  # vehicle population cap
    gamma: float = 0.05  # veh/m
    road_length: float = 4000.0
    d_trans: float = 300.0
    pgr: float = 20.0  # packets/s per requesting vehicle
    scheme: str = "two-tier"
    seed: int = 0
    ca2: float = 0.2
    cs2: float = 0.2
    warmup: float = 10.0
    mobility_dt: float = 1.0
    source_x: float = 800.0
    dest_offset: float = 1000.0
    request_prob: float = 0.005
    packet_bits: float = 800 * 8
    rate_floor: float = 3.0  # Mbps used by an in-range link whose draw falls below the table
    shadow_interval: float = 0.5
    weights: StabilityWeights = field(default_factory=StabilityWeights)
    theta_h: float = 0.05
    expiry_periods: int = 3
    lead_time: float = 1.0
    max_svs: Optional[int] = None
    class_mix: Tuple[float, float, float] = class_mix_from_percent(*PDR_CLASS_MIXES[2])
    antenna_offset: float = 0.1
    n_lanes: int = 3
    lane_width: float = 3.5
    corridor_half_width: Optional[float] = None
    radio: ch.RadioParams = field(default_factory=ch.RadioParams)
    sigma_min: float = 2.0
    sigma_max: float = 5.3
    nv_max: float = 0.25
    dcf: DcfParams = field(default_factory=DcfParams)
    rate_table: Tuple[Tuple[float, float], ...] = ch.DEFAULT_RATE_TABLE
    qna_snapshots: bool = True
    speed_laws: Optional[Dict[VehicleClass, SpeedLaw]] = None  # None keeps the default laws

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.d_trans <= 0:
            raise ConfigError("d_trans must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.pgr < 0:
            raise ConfigError("pgr must be non-negative")
        if not 0 <= self.warmup < self.duration:
            raise ConfigError("warmup must lie in [0, duration)")
        if self.ca2 <= 0 or self.cs2 < 0:
            raise ConfigError("need ca2 > 0 and cs2 >= 0")
        if self.mobility_dt <= 0 or self.shadow_interval <= 0:
            raise ConfigError("tick lengths must be positive")
        if not 0 <= self.request_prob <= 1:
            raise ConfigError("request_prob must lie in [0, 1]")
        if not 0 <= self.source_x < self.road_length:
            raise ConfigError("source_x must lie on the road")
        if self.rate_floor not in [r for _, r in self.rate_table]:
            raise ConfigError(f"rate_floor {self.rate_floor} is not a table rate")
        if self.dcf.frame_bits != self.packet_bits:
            self.dcf = replace(self.dcf, frame_bits=self.packet_bits)

    @property
    def stability_weights(self) -> StabilityWeights:
        return self.weights if self.scheme == "two-tier" else BASELINE_WEIGHTS

    def traffic(self) -> TrafficConfig:
        extra = {} if self.speed_laws is None else {"speed_laws": dict(self.speed_laws)}
        return TrafficConfig(density=self.gamma, road_length=self.road_length, class_mix=self.class_mix,
                             n_lanes=self.n_lanes, lane_width=self.lane_width,
                             max_vehicles=self.network_size, antenna_offset=self.antenna_offset, **extra)

    def fading(self, nv: float) -> ch.FadingEnvironment:
        return ch.FadingEnvironment(self.sigma_min, self.sigma_max, min(nv, self.nv_max), self.nv_max)


@dataclass
class Packet:
    id: int
    source: int
    destination: int
    created_at: float
    size: float
    tagged: bool
    hops: int = 0
    delivered_at: Optional[float] = None
    held: bool = False  # waited at some node for a missing next hop


@dataclass
class SimReport:
    scheme: str
    seed: int
    sent: int
    delivered: int
    dropped: int
    in_flight: int
    pdr: float
    zero_denominator: bool
    mean_e2ed: float
    mean_e2ed_connected: float
    held_fraction: float
    e2ed_samples: List[float]
    delivered_bits: float
    throughput_pps: float
    throughput_bps: float
    throughput_connected_pps: float
    churn: int
    n_vehicles: int
    n_requesters: int
    station_arrival_rates: Dict[int, float]
    station_utilization: Dict[int, float]
    station_presence: Dict[int, float]  # share of measurement ticks with a node at that path position
    qna_e2ed: float  # median over snapshots; the stationary wait diverges as rho -> 1
    qna_throughput: float
    qna_arrival_rates: Dict[int, float]
    qna_snapshots: int
    qna_skipped: int
    qna_overloaded: int
    events: List[str] = field(default_factory=list, repr=False)

    SCALARS = ("scheme", "seed", "sent", "delivered", "dropped", "in_flight", "pdr", "zero_denominator",
               "mean_e2ed", "mean_e2ed_connected", "held_fraction", "delivered_bits", "throughput_pps",
               "throughput_bps", "throughput_connected_pps", "churn", "n_vehicles", "n_requesters",
               "qna_e2ed", "qna_throughput", "qna_snapshots", "qna_skipped",
               "qna_overloaded")

    def row(self) -> Dict[str, object]:
        units = {"mean_e2ed": "mean_e2ed_s", "mean_e2ed_connected": "mean_e2ed_connected_s", "qna_e2ed": "qna_e2ed_s",
                 "throughput_pps": "throughput_pkt_per_s", "throughput_bps": "throughput_bit_per_s",
                 "throughput_connected_pps": "throughput_connected_pkt_per_s",
                 "qna_throughput": "qna_throughput_pkt_per_s"}
        return {units.get(k, k): getattr(self, k) for k in self.SCALARS}


class Simulation:
    """One run. `vehicles` replaces the synthetic placement with a scripted
    one (ids must be unique); mobility still follows the configured laws."""

    def __init__(self, config: RunConfig, vehicles: Optional[Sequence[VehicleState]] = None):
        self.cfg = config
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.rng_mob = np.random.default_rng(np.random.SeedSequence([config.seed, _MOBILITY]))
        self.rng_traffic = np.random.default_rng(np.random.SeedSequence([config.seed, _TRAFFIC]))
        self.rng_service = np.random.default_rng(np.random.SeedSequence([config.seed, _SERVICE]))
        self.tcfg = config.traffic()
        if vehicles is None:
            self.vehicles: List[VehicleState] = spawn_synthetic(self.tcfg, self.rng_mob)
        else:
            self.vehicles = sorted(vehicles, key=lambda v: (v.x, v.id))
            if len({v.id for v in self.vehicles}) != len(self.vehicles):
                raise ConfigError("duplicate vehicle ids")
        self.pos: Dict[int, VehicleState] = {v.id: v for v in self.vehicles}
        self.tick = 0
        self.queues: Dict[int, deque] = defaultdict(deque)
        self.busy: Dict[int, bool] = defaultdict(bool)
        self.busy_since: Dict[int, float] = {}
        self.stalled: set = set()
        self.backbone = BackboneState()
        self.tagged_path: List[int] = []
        self.pkt_id = 0
        self.sent = self.delivered = self.dropped = 0
        self.delivered_bits_window = 0.0
        self.delivered_window = 0
        self.delivered_window_connected = 0
        self.e2ed: List[float] = []
        self.e2ed_connected: List[float] = []
        self.arrivals_by_pos: Dict[int, int] = defaultdict(int)
        self.busy_by_pos: Dict[int, float] = defaultdict(float)
        self._power_cache: Dict[tuple, float] = {}
        self._rate_cache: Dict[tuple, float] = {}
        self._nv_cache: Dict[tuple, float] = {}
        self._n_cache: Dict[tuple, int] = {}
        self.snap_e2ed: List[float] = []
        self.snap_thr: List[float] = []
        self.snap_lam: Dict[int, List[float]] = defaultdict(list)
        self.snap_skipped = 0
        self.snap_overloaded = 0
        self.measure_ticks = 0
        self.presence: Dict[int, int] = defaultdict(int)
        self._pick_endpoints()

    # -- setup -------------------------------------------------------------

    def _pick_endpoints(self):
        cfg = self.cfg
        fwd = [v for v in self.vehicles if v.direction == 1]
        if len(fwd) < 2:
            raise ConfigError("not enough vehicles to place a source and a destination")
        src = min(fwd, key=lambda v: (abs(v.x - cfg.source_x), v.id))
        target = src.x + cfg.dest_offset
        dst = min((v for v in fwd if v.id != src.id), key=lambda v: (abs(v.x - target), v.id))
        self.source, self.dest = src.id, dst.id
        lo, hi = sorted((src.x, dst.x))
        between = [v.id for v in self.vehicles if lo < v.x < hi and v.id not in (src.id, dst.id)]
        picks = self.rng_traffic.random(len(between)) < cfg.request_prob
        self.requesters = [vid for vid, p in zip(between, picks) if p]

    # -- event plumbing ----------------------------------------------------

    def _push(self, t, kind, payload=None):
        heapq.heappush(self._heap, (t, self._seq, kind, payload))
        self._seq += 1

    def _interarrival(self) -> float:
        cfg = self.cfg
        shape = 1.0 / cfg.ca2
        return float(self.rng_traffic.gamma(shape, 1.0 / (cfg.pgr * shape)))

    def _service_time(self, mu: float) -> float:
        cs2 = self.cfg.cs2
        if cs2 == 0:
            return 1.0 / mu
        shape = 1.0 / cs2
        return float(self.rng_service.gamma(shape, 1.0 / (mu * shape)))

    # -- channel and MAC ---------------------------------------------------

    def _nv(self, u: int) -> float:
        key = (u, self.tick)
        if key not in self._nv_cache:
            x = self.pos[u].x
            d = self.cfg.d_trans
            count = sum(1 for v in self.vehicles if abs(v.x - x) <= d)
            self._nv_cache[key] = count / (2.0 * d)
        return self._nv_cache[key]

    def _mean_power(self, u: int, v: int) -> float:
        key = (u, v, self.tick)
        if key not in self._power_cache:
            lc = ch.classify_link(self.pos[u], self.pos[v], self.vehicles, self.cfg.lane_width,
                                  self.cfg.corridor_half_width)
            self._power_cache[key] = ch.received_power_dbm(lc.geometry, self.cfg.radio, lc.profile)
        return self._power_cache[key]

    def _sigma(self, u: int) -> float:
        return ch.small_scale_sigma(self.cfg.fading(self._nv(u)))

    def link_rate(self, u: int, v: int) -> float:
        """PHY rate (Mbps) of u->v for the current shadowing interval."""
        k = int(self.now // self.cfg.shadow_interval)
        key = (u, v, k)
        if key not in self._rate_cache:
            draw = np.random.default_rng([self.cfg.seed, _SHADOW, u, v, k]).normal(0.0, self._sigma(u))
            r = ch.rate_from_power(self._mean_power(u, v) + draw, self.cfg.rate_table)
            self._rate_cache[key] = max(r, self.cfg.rate_floor)
        return self._rate_cache[key]

    def _active(self) -> set:
        act = set(self.backbone.chain) | set(self.requesters) | {self.source}
        act.update(n for n, q in self.queues.items() if q)
        return act

    def contenders(self, u: int) -> int:
        key = (u, int(self.now // self.cfg.shadow_interval), self.tick)
        if key not in self._n_cache:
            x = self.pos[u].x
            d = self.cfg.d_trans
            n = sum(1 for a in self._active() if a in self.pos and abs(self.pos[a].x - x) <= d)
            self._n_cache[key] = max(n, 1)
        return self._n_cache[key]

    def expected_hop_rate(self, u: int, v: int) -> float:
        """Reciprocal of the mean service time of u->v, averaging over the
        shadowing distribution of the link rate."""
        n = self.contenders(u)
        mean_s = 0.0
        for r, p in ch.rate_distribution(self._mean_power(u, v), self._sigma(u), self.cfg.rate_table):
            if p <= 0:
                continue
            r = max(r, self.cfg.rate_floor)
            mean_s += p / service_rate(self.cfg.dcf, n, r * 1e6)
        return 1.0 / mean_s

    # -- packet handling ---------------------------------------------------

    def _path_index(self, node: int) -> int:
        try:
            return self.tagged_path.index(node)
        except ValueError:
            return -1

    def _arrive(self, node: int, pkt: Packet):
        q = self.queues[node]
        if node in self.stalled or any(p.held for p in q):
            # delayed by a disconnection backlog
            pkt.held = True
        q.append(pkt)
        if self.now >= self.cfg.warmup:
            self.arrivals_by_pos[self._path_index(node)] += 1
        self._start(node)

    def _start(self, u: int):
        q = self.queues[u]
        while q and not self.busy[u]:
            pkt = q[0]
            if pkt.destination not in self.pos:
                q.popleft()
                self.dropped += 1
                continue
            hop = forward_next_hop(pkt.destination, u, self.backbone, self.pos, self.cfg.d_trans)
            if hop.action == "hold":
                self.stalled.add(u)
                for p in q:
                    p.held = True
                return
            self.stalled.discard(u)
            v = hop.target
            mu = service_rate(self.cfg.dcf, self.contenders(u), self.link_rate(u, v) * 1e6)
            s = self._service_time(mu)
            self.busy[u] = True
            self.busy_since[u] = self.now
            self._push(self.now + s, TXEND, (u, v, pkt))

    def _tx_end(self, u: int, v: int, pkt: Packet):
        self.busy[u] = False
        start = self.busy_since.pop(u, self.now)
        if start >= self.cfg.warmup:
            self.busy_by_pos[self._path_index(u)] += self.now - start
        q = self.queues.get(u)
        if q and q[0] is pkt:
            q.popleft()
        pkt.hops += 1
        if v == pkt.destination:
            pkt.delivered_at = self.now
            self.delivered += 1
            if self.now >= self.cfg.warmup:
                self.delivered_window += 1
                self.delivered_bits_window += pkt.size
                if not pkt.held:
                    self.delivered_window_connected += 1
                if pkt.tagged and pkt.created_at >= self.cfg.warmup:
                    self.e2ed.append(self.now - pkt.created_at)
                    if not pkt.held:
                        self.e2ed_connected.append(self.now - pkt.created_at)
        elif v in self.pos:
            self._arrive(v, pkt)
        else:
            self.dropped += 1
        if u in self.pos:
            self._start(u)

    def _generate(self, node: int):
        if node not in self.pos:
            return
        pkt = Packet(self.pkt_id, node, self.dest, self.now, self.cfg.packet_bits, node == self.source)
        self.pkt_id += 1
        self.sent += 1
        self._arrive(node, pkt)
        self._push(self.now + self._interarrival(), GEN, node)

    def _retry_stalled(self):
        for u in sorted(self.stalled):
            if u in self.pos:
                self._start(u)
            else:
                self.stalled.discard(u)

    # -- topology ----------------------------------------------------------

    def _beacons(self) -> Dict[int, Beacon]:
        req = set(self.requesters) | {self.source}
        cls = self.backbone.classes
        return {v.id: Beacon.from_vehicle(v, self.now, self.cfg.lane_width, v.id in req, cls.get(v.id, 1))
                for v in self.vehicles}

    def _bootstrap(self, node: int):
        try:
            self.backbone = bootstrap_backbone(
                self.vehicles, node, self.cfg.stability_weights, self.cfg.d_trans, self.dest,
                self.cfg.max_svs, backbone=self.backbone, now=self.now, lane_width=self.cfg.lane_width)
        except BootstrapFailed as exc:
            log.debug("t=%.2f %s", self.now, exc)

    def _maintain(self):
        if self.source not in self.pos or self.dest not in self.pos:
            return
        if self.backbone.chain:
            self.backbone = maintain(self.backbone, self._beacons(), self.cfg.stability_weights, self.now,
                                     self.cfg.d_trans, self.cfg.theta_h, self.cfg.expiry_periods,
                                     max_svs=self.cfg.max_svs, lead_time=self.cfg.lead_time)
        # requesting vehicles that hear no SV (nor the destination) elect their own
        for node in [self.source] + self.requesters:
            if node in self.pos:
                self._bootstrap(node)
        # replaced SVs keep their role until their queue drains
        self.backbone.retired = [r for r in self.backbone.retired if self.queues.get(r)]
        self._refresh_path()
        self._n_cache.clear()

    def _walk(self, start: int, limit: int = 64) -> Optional[List[int]]:
        path = [start]
        cur = start
        for _ in range(limit):
            hop = forward_next_hop(self.dest, cur, self.backbone, self.pos, self.cfg.d_trans)
            if hop.action == "hold":
                return None
            path.append(hop.target)
            if hop.action == "deliver":
                return path
            cur = hop.target
        return None

    def _refresh_path(self):
        self.tagged_path = self._walk(self.source) or []

    def _mobility(self):
        old = set(self.pos)
        self.vehicles = step_mobility(self.vehicles, self.cfg.mobility_dt, self.rng_mob, self.tcfg)
        svs = set(self.backbone.chain) | set(self.backbone.retired)
        self.vehicles = mark_svs(self.vehicles, svs)
        self.pos = {v.id: v for v in self.vehicles}
        self.tick += 1
        self._power_cache.clear()
        self._nv_cache.clear()
        self._n_cache.clear()
        for gone in old - set(self.pos):
            q = self.queues.pop(gone, None)
            if q:
                # the head may be on the air; it completes at its TXEND
                self.dropped += len(q) - (1 if self.busy[gone] else 0)
                if self.busy[gone]:
                    self.queues[gone] = deque([q[0]])
        self._refresh_path()

    # -- analytic prediction ------------------------------------------------

    def qna_snapshot(self):
        """Solve the queueing model on the current topology.

        Returns ((e2ed, per-position arrival rates) or None, throughput). The
        first item is None while the tagged flow has no path or a station is
        overloaded; throughput is None only on overload, and counts
        disconnected flows as zero."""
        cfg = self.cfg
        path = self.tagged_path
        if not path or self.source not in self.pos:
            return None, self._direct_throughput()
        lam_pos = defaultdict(float)
        ext = defaultdict(list)
        direct = 0
        stations = path[1:-1]
        for r in self.requesters:
            if r not in self.pos:
                continue
            walk = self._walk(r)
            if walk is None:
                continue
            if len(walk) == 2:
                direct += 1
                continue
            hit = next((n for n in walk if n in stations), None)
            if hit is not None:
                ext[hit].append(ExternalSource(cfg.pgr, cfg.ca2))
        try:
            tau_src = self.expected_hop_rate(path[0], path[1])
            src_sol = solve_chain(ChainModel([Station([ExternalSource(cfg.pgr, cfg.ca2)], [tau_src], [1.0], 0,
                                                      cfg.cs2)]))
            delay = 1.0 / tau_src + src_sol.stations[0].wait
            lam_pos[0] = cfg.pgr
            thr = direct * cfg.pgr
            if stations:
                ext[stations[0]].insert(0, ExternalSource(cfg.pgr, cfg.ca2))
                hops = [self.expected_hop_rate(a, b) for a, b in zip(stations, path[2:])]
                model = ChainModel([Station(ext.get(s, []), [h], [1.0], 0, cfg.cs2) for s, h in zip(stations, hops)])
                sol = solve_chain(model)
                delay += chain_delay(sol, 0, len(stations), hops)
                thr += chain_throughput(sol)
                for k, st in enumerate(sol.stations, start=1):
                    lam_pos[k] = st.lam
            else:
                thr += min(cfg.pgr, tau_src)
        except OverloadError:
            return None, None
        return (delay, dict(lam_pos)), thr

    def _direct_throughput(self) -> float:
        """Offered load that reaches the destination while the tagged flow is cut off."""
        total = 0.0
        for r in self.requesters:
            if r in self.pos and self._walk(r) is not None:
                total += self.cfg.pgr
        return total

    def _measure(self):
        if self.now < self.cfg.warmup:
            return
        self.measure_ticks += 1
        for k in range(len(self.tagged_path) - 1):
            self.presence[k] += 1
        if not self.cfg.qna_snapshots:
            return
        snap, thr = self.qna_snapshot()
        if thr is not None:
            self.snap_thr.append(thr)
        if snap is None:
            if thr is None:
                # overloaded station: unbounded delay, kept so the median sees it
                self.snap_e2ed.append(math.inf)
                self.snap_overloaded += 1
            else:
                self.snap_skipped += 1
            return
        d, lam = snap
        self.snap_e2ed.append(d)
        for k, v in lam.items():
            self.snap_lam[k].append(v)

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimReport:
        cfg = self.cfg
        self._maintain()
        self._push(cfg.mobility_dt, MOBILITY)
        self._push(self._next_maintain_delay(), MAINTAIN)
        if cfg.pgr > 0:
            for node in [self.source] + self.requesters:
                self._push(self._interarrival(), GEN, node)
        while self._heap:
            t, _, kind, payload = heapq.heappop(self._heap)
            if t > cfg.duration:
                break
            self.now = t
            if kind == MOBILITY:
                self._mobility()
                self._measure()
                self._retry_stalled()
                self._push(t + cfg.mobility_dt, MOBILITY)
            elif kind == MAINTAIN:
                self._maintain()
                self._retry_stalled()
                self._push(t + self._next_maintain_delay(), MAINTAIN)
            elif kind == GEN:
                self._generate(payload)
            elif kind == TXEND:
                self._tx_end(*payload)
        self.now = cfg.duration
        return self._report()

    def _next_maintain_delay(self) -> float:
        chain = self.backbone.chain
        if not chain:
            return 0.5
        return min(self.backbone.period(sv) for sv in chain)

    def _report(self) -> SimReport:
        cfg = self.cfg
        window = cfg.duration - cfg.warmup
        in_flight = sum(len(q) for q in self.queues.values())
        zero = self.sent == 0
        pdr = 1.0 if zero else self.delivered / self.sent
        churn = sum(1 for e in self.backbone.events if e.kind in ("ELECT", "REPLACE", "BREAK") and e.time > 0)
        return SimReport(
            scheme=cfg.scheme, seed=cfg.seed, sent=self.sent, delivered=self.delivered, dropped=self.dropped,
            in_flight=in_flight, pdr=pdr, zero_denominator=zero,
            mean_e2ed=float(np.mean(self.e2ed)) if self.e2ed else math.nan,
            mean_e2ed_connected=float(np.mean(self.e2ed_connected)) if self.e2ed_connected else math.nan,
            held_fraction=1.0 - len(self.e2ed_connected) / len(self.e2ed) if self.e2ed else 0.0,
            e2ed_samples=list(self.e2ed), delivered_bits=self.delivered_bits_window,
            throughput_pps=self.delivered_window / window, throughput_bps=self.delivered_bits_window / window,
            throughput_connected_pps=self.delivered_window_connected / window,
            churn=churn, n_vehicles=len(self.vehicles), n_requesters=len(self.requesters),
            station_arrival_rates={k: v / window for k, v in sorted(self.arrivals_by_pos.items())},
            station_utilization={k: v / window for k, v in sorted(self.busy_by_pos.items())},
            station_presence={k: v / self.measure_ticks for k, v in sorted(self.presence.items())},
            qna_e2ed=float(np.median(self.snap_e2ed)) if self.snap_e2ed else math.nan,
            qna_throughput=float(np.mean(self.snap_thr)) if self.snap_thr else math.nan,
            qna_arrival_rates={k: float(np.mean(v)) for k, v in sorted(self.snap_lam.items())},
            qna_snapshots=len(self.snap_e2ed), qna_skipped=self.snap_skipped,
            qna_overloaded=self.snap_overloaded,
            events=[e.line() for e in self.backbone.events],
        )


def run(config: RunConfig) -> SimReport:
    return Simulation(config).run()


def compare_schemes(config: RunConfig) -> Tuple[SimReport, SimReport]:
    """Two-tier and baseline runs on identical seeds (same placement,
    mobility, traffic and shadowing realisations)."""
    a = run(replace(config, scheme="two-tier"))
    b = run(replace(config, scheme="baseline"))
    return a, b
