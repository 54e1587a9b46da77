"""INI run configuration.

Sections and keys (times in the [mac] section are microseconds)::

    [traffic]  gamma network_size road_length class_mix antenna_offset n_lanes lane_width
    [radio]    tx_power_dbm gain_t gain_r sigma_min sigma_max nv_max corridor_half_width
               rate_floor shadow_interval
    [mac]      cw slot_time sifs difs rts cts ack p_e
    [protocol] alpha beta d_trans theta_h expiry_periods lead_time max_svs
    [qna]      ca2 cs2
    [sim]      duration pgr scheme seed warmup mobility_dt source_x dest_offset
               request_prob packet_bits

`class_mix` is "large,mid,compact" in percent. Sweep keys may be written
as `section.key` or as the bare key.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from typing import Dict, Iterable, List, Tuple

from .channel import RadioParams
from .dcf import DcfParams
from .protocol import StabilityWeights
from .sim import ConfigError, RunConfig
from .traffic import class_mix_from_percent


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _opt_int(s: str):
    return None if s.strip().lower() in ("", "none") else int(s)


def _mix(s: str):
    parts = [float(p) for p in s.replace(";", ",").split(",")]
    if len(parts) != 3:
        raise ValueError("class_mix needs three percentages: large,mid,compact")
    return class_mix_from_percent(*parts)


# (section, key) -> parser
SCHEMA: Dict[Tuple[str, str], object] = {
    ("traffic", "gamma"): float, ("traffic", "network_size"): int, ("traffic", "road_length"): float,
    ("traffic", "class_mix"): _mix, ("traffic", "antenna_offset"): float, ("traffic", "n_lanes"): int,
    ("traffic", "lane_width"): float,
    ("radio", "tx_power_dbm"): float, ("radio", "gain_t"): float, ("radio", "gain_r"): float,
    ("radio", "sigma_min"): float, ("radio", "sigma_max"): float, ("radio", "nv_max"): float,
    ("radio", "corridor_half_width"): _opt_float, ("radio", "rate_floor"): float,
    ("radio", "shadow_interval"): float,
    ("mac", "cw"): int, ("mac", "slot_time"): float, ("mac", "sifs"): float, ("mac", "difs"): float,
    ("mac", "rts"): float, ("mac", "cts"): float, ("mac", "ack"): float, ("mac", "p_e"): float,
    ("protocol", "alpha"): float, ("protocol", "beta"): float, ("protocol", "d_trans"): float,
    ("protocol", "theta_h"): float, ("protocol", "expiry_periods"): int, ("protocol", "lead_time"): float,
    ("protocol", "max_svs"): _opt_int,
    ("qna", "ca2"): float, ("qna", "cs2"): float,
    ("sim", "duration"): float, ("sim", "pgr"): float, ("sim", "scheme"): str, ("sim", "seed"): int,
    ("sim", "warmup"): float, ("sim", "mobility_dt"): float, ("sim", "source_x"): float,
    ("sim", "dest_offset"): float, ("sim", "request_prob"): float, ("sim", "packet_bits"): float,
}

_BARE = {}
for _sec, _key in SCHEMA:
    _BARE.setdefault(_key, []).append((_sec, _key))


def resolve_key(name: str) -> Tuple[str, str]:
    if "." in name:
        sec, key = name.split(".", 1)
        if (sec, key) not in SCHEMA:
            raise ConfigError(f"unknown config key {name!r}")
        return sec, key
    hits = _BARE.get(name, [])
    if len(hits) != 1:
        raise ConfigError(f"unknown or ambiguous config key {name!r}")
    return hits[0]


def read_ini(path) -> Dict[Tuple[str, str], str]:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    out = {}
    for sec in cp.sections():
        for key, value in cp.items(sec):
            if (sec, key) not in SCHEMA:
                raise ConfigError(f"{path}: unknown key [{sec}] {key}")
            out[(sec, key)] = value
    return out


def build_config(values: Dict[Tuple[str, str], str], base: RunConfig = None) -> RunConfig:
    """Apply raw string values on top of `base` (defaults when None)."""
    cfg = base if base is not None else RunConfig()
    parsed = {}
    for k, raw in values.items():
        try:
            parsed[k] = SCHEMA[k](raw)
        except ValueError as exc:
            raise ConfigError(f"[{k[0]}] {k[1]} = {raw!r}: {exc}") from exc
    sim_fields = {}
    radio = {}
    mac = {}
    for (sec, key), v in parsed.items():
        if sec == "traffic":
            sim_fields[key] = v
        elif sec == "radio":
            if key in ("tx_power_dbm", "gain_t", "gain_r"):
                radio[key] = v
            else:
                sim_fields[key] = v
        elif sec == "mac":
            mac[key] = v
        elif sec == "protocol":
            if key not in ("alpha", "beta"):
                sim_fields[key] = v
        else:
            sim_fields[key] = v
    alpha = parsed.get(("protocol", "alpha"))
    beta = parsed.get(("protocol", "beta"))
    try:
        if alpha is not None or beta is not None:
            if alpha is None:
                alpha = 1.0 - beta
            if beta is None:
                beta = 1.0 - alpha
            sim_fields["weights"] = StabilityWeights(alpha, beta)
        if radio:
            sim_fields["radio"] = replace(cfg.radio, **radio)
        if mac:
            timing = {"slot_time", "sifs", "difs", "rts", "cts", "ack"}
            conv = {k: (v * 1e-6 if k in timing else v) for k, v in mac.items()}
            sim_fields["dcf"] = replace(cfg.dcf, **conv)
        return replace(cfg, **sim_fields)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: Dict[str, str] = None) -> RunConfig:
    values = read_ini(path) if path else {}
    for name, raw in (overrides or {}).items():
        values[resolve_key(name)] = str(raw)
    return build_config(values)


def parse_sweep(specs: Iterable[str]) -> List[Tuple[str, List[str]]]:
    """Parse `key=v1,v2,...` items; keys are validated against the schema."""
    axes = []
    seen = set()
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"sweep {spec!r} is not key=v1,v2,...")
        name, vals = spec.split("=", 1)
        sec, key = resolve_key(name.strip())
        if (sec, key) in seen:
            raise ConfigError(f"sweep axis {name!r} given twice")
        seen.add((sec, key))
        values = [v.strip() for v in vals.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"sweep {name!r} has no values")
        axes.append((f"{sec}.{key}", values))
    return axes


def dump_config(cfg: RunConfig) -> str:
    """INI text reproducing `cfg` for the keys in the schema."""
    large, mid, compact = cfg.class_mix[2] * 100, cfg.class_mix[1] * 100, cfg.class_mix[0] * 100
    us = 1e6
    d = cfg.dcf
    sections = {
        "traffic": {"gamma": cfg.gamma, "network_size": cfg.network_size, "road_length": cfg.road_length,
                    "class_mix": f"{large:.6g},{mid:.6g},{compact:.6g}", "antenna_offset": cfg.antenna_offset,
                    "n_lanes": cfg.n_lanes, "lane_width": cfg.lane_width},
        "radio": {"tx_power_dbm": cfg.radio.tx_power_dbm, "gain_t": cfg.radio.gain_t, "gain_r": cfg.radio.gain_r,
                  "sigma_min": cfg.sigma_min, "sigma_max": cfg.sigma_max, "nv_max": cfg.nv_max,
                  "corridor_half_width": cfg.corridor_half_width, "rate_floor": cfg.rate_floor,
                  "shadow_interval": cfg.shadow_interval},
        "mac": {"cw": d.cw, "slot_time": round(d.slot_time * us, 6), "sifs": round(d.sifs * us, 6),
                "difs": round(d.difs * us, 6), "rts": round(d.rts * us, 6), "cts": round(d.cts * us, 6),
                "ack": round(d.ack * us, 6), "p_e": d.p_e},
        "protocol": {"alpha": cfg.weights.alpha, "beta": cfg.weights.beta, "d_trans": cfg.d_trans,
                     "theta_h": cfg.theta_h, "expiry_periods": cfg.expiry_periods, "lead_time": cfg.lead_time,
                     "max_svs": cfg.max_svs},
        "qna": {"ca2": cfg.ca2, "cs2": cfg.cs2},
        "sim": {"duration": cfg.duration, "pgr": cfg.pgr, "scheme": cfg.scheme, "seed": cfg.seed,
                "warmup": cfg.warmup, "mobility_dt": cfg.mobility_dt, "source_x": cfg.source_x,
                "dest_offset": cfg.dest_offset, "request_prob": cfg.request_prob, "packet_bits": cfg.packet_bits},
    }
    lines = []
    for sec, kv in sections.items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {'none' if v is None else v}" for k, v in kv.items())
        lines.append("")
    return "\n".join(lines)
