"""802.11 DCF contention model with a constant contention window.

Durations are seconds internally; `DcfParams.from_microseconds` accepts the
microsecond values used in config files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

US = 1e-6


@dataclass(frozen=True)
class DcfParams:
    cw: int = 32
    slot_time: float = 13 * US
    sifs: float = 32 * US
    difs: float = 32 * US
    rts: float = 53 * US
    cts: float = 37 * US
    ack: float = 37 * US  # same control-frame format as CTS
    p_e: float = 0.0
    frame_bits: float = 800 * 8
    mean_rate: float = 6e6  # bits/s

    def __post_init__(self):
        if self.cw < 1:
            raise ValueError("CW must be >= 1")
        for name in ("slot_time", "sifs", "difs", "rts", "cts", "ack", "frame_bits", "mean_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.p_e <= 1:
            raise ValueError("p_e must lie in [0, 1]")

    @classmethod
    def from_microseconds(cls, **kw):
        timing = {"slot_time", "sifs", "difs", "rts", "cts", "ack"}
        known = {f.name for f in fields(cls)}
        unknown = set(kw) - known
        if unknown:
            raise KeyError(f"unknown DCF parameter(s): {sorted(unknown)}")
        return cls(**{k: (v * US if k in timing else v) for k, v in kw.items()})


def attempt_probability(cw: int) -> float:
    if cw < 1:
        raise ValueError("CW must be >= 1")
    return 2.0 / (cw + 1)


def vehicles_in_range_pmf(density: float, span: float, n: int) -> float:
    """Poisson probability of n vehicles within a range of `span` meters."""
    if density <= 0 or span <= 0:
        raise ValueError("density and span must be positive")
    if n < 0:
        return 0.0
    mu = density * span
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))


def busy_probability(tau_p: float, n: int) -> float:
    return 1.0 - (1.0 - tau_p) ** n


def success_probability(tau_p: float, n: int, p_e: float = 0.0) -> float:
    if n < 1:
        raise ValueError("need at least one station")
    return n * tau_p * (1.0 - tau_p) ** (n - 1) * (1.0 - p_e)


def collision_time(p: DcfParams) -> float:
    return p.rts + p.difs + p.slot_time


def success_time(p: DcfParams, rate: float | None = None) -> float:
    rate = p.mean_rate if rate is None else rate
    return p.rts + 3 * p.sifs + 4 * p.slot_time + p.cts + p.ack + p.difs + p.frame_bits / rate


def mean_slot_time(p: DcfParams, n: int, rate: float | None = None) -> float:
    """Mean duration of a contention slot with n saturated stations."""
    tau = attempt_probability(p.cw)
    busy = busy_probability(tau, n)
    ps = success_probability(tau, n, p.p_e)
    assert ps <= busy + 1e-12, "success probability exceeds busy probability"
    return (1 - busy) * p.slot_time + (busy - ps) * collision_time(p) + ps * success_time(p, rate)


def service_rate(p: DcfParams, n: int, rate: float) -> float:
    """Packets per second a tagged station among n saturated ones delivers
    when its own link runs at `rate` bits/s."""
    if rate <= 0:
        raise ValueError("PHY rate must be positive")
    n = max(int(n), 1)
    tau = attempt_probability(p.cw)
    t = mean_slot_time(p, n, rate)
    assert t > 0
    return success_probability(tau, n, p.p_e) / n / t


def with_error(p: DcfParams, p_e: float) -> DcfParams:
    return replace(p, p_e=p_e)
