"""Queueing-network analysis of the stable-vehicle chain.

Each backbone vehicle is a G/G/1 station described by the mean and squared
coefficient of variation (SCV) of its arrival and service processes. The
chain is feed-forward: station j receives external traffic from attached
vehicles plus the split output of station j-1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple


class OverloadError(ValueError):
    """Raised when a station's utilisation reaches 1."""

    def __init__(self, station: int, rho: float):
        super().__init__(f"station {station} overloaded (rho={rho:.4f})")
        self.station = station
        self.rho = rho


class ExternalSource(NamedTuple):
    rate: float
    scv: float = 1.0


@dataclass
class Station:
    """Input description of one chain station.

    `hop_rates[k]` is the service rate towards next hop k and `splits[k]` the
    fraction of departures routed there; `next_index` marks the hop to the
    following station (or the final destination for the last one).
    """

    external: List[ExternalSource] = field(default_factory=list)
    hop_rates: List[float] = field(default_factory=lambda: [1.0])
    splits: List[float] = field(default_factory=lambda: [1.0])
    next_index: int = 0
    next_hop_scv: float = 1.0
    gen_rate: float = 0.0

    @property
    def forward_split(self) -> float:
        return self.splits[self.next_index]


@dataclass
class ChainModel:
    stations: List[Station]

    def __len__(self):
        return len(self.stations)


@dataclass
class StationResult:
    lam_ext: float
    scv_ext: float
    lam_in: float
    scv_in: float
    lam: float
    scv_a: float
    tau: float
    scv_s: float
    rho: float
    alpha: float
    wait: float
    gen_rate: float


@dataclass
class ChainSolution:
    stations: List[StationResult]

    def waits(self):
        return [s.wait for s in self.stations]


def external_arrival(sources: Sequence[ExternalSource]) -> float:
    return float(sum(s.rate for s in sources))


def asymptotic_weight(rho: float, proportions: Sequence[float]) -> float:
    """Convex-combination weight of the superposition approximation."""
    total = sum(proportions)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"proportions must sum to 1 (got {total})")
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    v = 1.0 / sum(p * p for p in proportions)
    return 1.0 / (1.0 + 4.0 * (1.0 - rho) ** 2 * (v - 1.0))


def superpose_external(sources: Sequence[ExternalSource], alpha: float) -> float:
    lam0 = external_arrival(sources)
    if lam0 == 0:
        return 1.0
    return alpha * sum(s.rate / lam0 * s.scv for s in sources) + 1.0 - alpha


def split_departure(lam_up: float, scv_up: float, gen_rate: float, q: float) -> Tuple[float, float]:
    """Rate and SCV of the stream an upstream station routes onward.

    The SCV transform is applied to the upstream arrival SCV directly.
    """
    if not 0 <= q <= 1:
        raise ValueError("split fraction must lie in [0, 1]")
    return (lam_up + gen_rate) * q, scv_up * q + 1.0 - q


def merge_arrivals(ext: Tuple[float, float], internal: Tuple[float, float], alpha: float) -> Tuple[float, float]:
    lam0, c0 = ext
    lam_in, c_in = internal
    lam = lam0 + lam_in
    if lam == 0:
        return 0.0, 1.0
    return lam, alpha * (lam0 / lam * c0 + lam_in / lam * c_in) + 1.0 - alpha


def service_process(hop_rates: Sequence[float], splits: Sequence[float], next_hop_scv: float,
                    next_index: int = 0) -> Tuple[float, float]:
    """Station service rate and SCV from its per-hop rates and routing splits."""
    if len(hop_rates) != len(splits):
        raise ValueError("hop_rates and splits differ in length")
    if abs(sum(splits) - 1.0) > 1e-9:
        raise ValueError("splits must sum to 1")
    tau = float(sum(q * r for q, r in zip(splits, hop_rates)))
    q = splits[next_index]
    if q == 0:
        if next_hop_scv != 1.0:
            raise ValueError("zero split towards next station with non-Poisson link SCV")
        return tau, 1.0
    scv = (next_hop_scv - 1.0) / q + 1.0
    if scv < 0:
        raise ValueError(f"split {q} too small for link SCV {next_hop_scv}: station SCV {scv:.3f} < 0")
    return tau, scv


def hop_scv_from_station(station_scv: float, q: float) -> float:
    """Inverse of the service SCV relation: SCV of one hop given the station's."""
    return q * station_scv + 1.0 - q


def utilization(lam: float, gen_rate: float, tau: float, station: int = 0) -> float:
    if tau <= 0:
        raise ValueError("service rate must be positive")
    rho = (lam + gen_rate) / tau
    if rho >= 1:
        raise OverloadError(station, rho)
    return rho


def klb_factor(rho: float, ca2: float, cs2: float) -> float:
    if ca2 >= 1:
        return 1.0
    return math.exp(-(2.0 * (1.0 - rho) / (3.0 * rho)) * (1.0 - ca2) ** 2 / (ca2 + cs2))


def waiting_time(rho: float, tau: float, ca2: float, cs2: float) -> float:
    """Mean queueing delay of a G/G/1 station (QNA / KLB form)."""
    if rho <= 0:
        return 0.0
    if rho >= 1:
        raise OverloadError(0, rho)
    g = klb_factor(rho, ca2, cs2)
    return rho * (ca2 + cs2) * g / (2.0 * tau * (1.0 - rho))


def mm1_wait(rho: float, tau: float) -> float:
    return rho / (tau * (1.0 - rho))


def solve_chain(chain: ChainModel, fixed_scv: Optional[Tuple[float, float]] = None) -> ChainSolution:
    """Propagate rates then SCVs down the chain.

    Rates and utilisations do not depend on SCVs, so they are computed first;
    the second sweep uses those utilisations in the superposition weights.
    With `fixed_scv=(ca2, cs2)` every station uses the given arrival and
    service SCVs instead of the propagated ones.
    """
    st = chain.stations
    if not st:
        return ChainSolution([])
    lam_ext, lam_in, lam, tau, rho = [], [], [], [], []
    for j, s in enumerate(st):
        l0 = external_arrival(s.external)
        li = 0.0
        if j > 0:
            li = (lam[j - 1] + st[j - 1].gen_rate) * st[j - 1].forward_split
        t, _ = service_process(s.hop_rates, s.splits, 1.0, s.next_index)
        lam_ext.append(l0)
        lam_in.append(li)
        lam.append(l0 + li)
        tau.append(t)
        rho.append(utilization(l0 + li, s.gen_rate, t, station=j))

    out = []
    prev_scv_a = 1.0
    for j, s in enumerate(st):
        # arrival components: each external source and the upstream stream
        comps = [src.rate for src in s.external if src.rate > 0]
        if lam_in[j] > 0:
            comps.append(lam_in[j])
        if lam[j] > 0:
            alpha = asymptotic_weight(rho[j], [c / lam[j] for c in comps])
        else:
            alpha = 1.0
        c0 = superpose_external(s.external, alpha)
        if j > 0:
            _, c_in = split_departure(lam[j - 1], prev_scv_a, st[j - 1].gen_rate, st[j - 1].forward_split)
        else:
            c_in = 1.0
        _, ca2 = merge_arrivals((lam_ext[j], c0), (lam_in[j], c_in), alpha)
        _, cs2 = service_process(s.hop_rates, s.splits, s.next_hop_scv, s.next_index)
        if fixed_scv is not None:
            ca2, cs2 = fixed_scv
        wt = waiting_time(rho[j], tau[j], ca2, cs2)
        out.append(StationResult(lam_ext[j], c0, lam_in[j], c_in, lam[j], ca2, tau[j], cs2,
                                 rho[j], alpha, wt, s.gen_rate))
        prev_scv_a = ca2
    return ChainSolution(out)


def chain_delay(solution: ChainSolution, i: int, j: int, hop_rates: Sequence[float]) -> float:
    """Mean end-to-end delay of a packet entering station i and leaving the
    chain at node j (exclusive): waits at stations i..j-1 plus one transfer
    time 1/tau per hop k -> k+1, with hop_rates[k] in packets/s."""
    if i > j:
        raise ValueError("need i <= j")
    total = 0.0
    for k in range(i, j):
        if hop_rates[k] <= 0:
            raise ValueError(f"hop {k} has non-positive rate")
        total += 1.0 / hop_rates[k] + solution.stations[k].wait
    return total


def chain_throughput(solution: ChainSolution) -> float:
    """Aggregate chain throughput: each station contributes the smaller of
    its own injected load and its service rate."""
    if not solution.stations:
        raise ValueError("empty chain")
    return float(sum(min(s.lam_ext + s.gen_rate, s.tau) for s in solution.stations))


def forward_hop_rates(chain: ChainModel) -> List[float]:
    return [s.hop_rates[s.next_index] for s in chain.stations]


def delay_surface(chain: ChainModel, ca2_grid: Sequence[float], cs2_grid: Sequence[float]):
    """End-to-end chain delay with every station's SCVs pinned to each
    (ca2, cs2) grid point. Returns rows (ca2, cs2, delay_s)."""
    hops = forward_hop_rates(chain)
    rows = []
    for ca2 in ca2_grid:
        for cs2 in cs2_grid:
            sol = solve_chain(chain, fixed_scv=(ca2, cs2))
            rows.append((ca2, cs2, chain_delay(sol, 0, len(chain), hops)))
    return rows


# --------------------------------------------------------------------------
# chain description files


def chain_from_dict(doc: dict) -> ChainModel:
    stations = []
    for k, raw in enumerate(doc["stations"]):
        try:
            ext = [ExternalSource(float(e["rate"]), float(e.get("scv", 1.0))) for e in raw.get("external", [])]
            hop_rates = [float(r) for r in raw["hop_rates"]]
            splits = [float(q) for q in raw.get("splits", [1.0] * len(hop_rates))]
            stations.append(Station(
                external=ext, hop_rates=hop_rates, splits=splits,
                next_index=int(raw.get("next_index", 0)),
                next_hop_scv=float(raw.get("next_hop_scv", 1.0)),
                gen_rate=float(raw.get("gen_rate", 0.0)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"station {k}: {exc}") from exc
    return ChainModel(stations)


def chain_to_dict(chain: ChainModel) -> dict:
    return {"stations": [
        {
            "external": [{"rate": e.rate, "scv": e.scv} for e in s.external],
            "hop_rates": list(s.hop_rates), "splits": list(s.splits),
            "next_index": s.next_index, "next_hop_scv": s.next_hop_scv, "gen_rate": s.gen_rate,
        } for s in chain.stations
    ]}


def load_chain(path) -> Tuple[ChainModel, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    return chain_from_dict(doc), doc
