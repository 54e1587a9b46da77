"""Static SVG figures. Output is byte-reproducible: fixed hash salt, no
creation date."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .traffic import VehicleClass  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "svbackbone"


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def speed_std_cdf(path, records, stds):
    classes = {r.vehicle_id: r.vehicle_class for r in records}
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for vc in VehicleClass:
        vals = np.sort([s for vid, s in stds.items() if classes[vid] == vc]) * 3.6
        if len(vals):
            ax.step(vals, np.arange(1, len(vals) + 1) / len(vals), where="post", label=vc.name.lower())
    ax.set_xlabel("speed standard deviation (km/h)")
    ax.set_ylabel("CDF")
    ax.legend()
    _save(fig, path)


def mean_speed_hist(path, means):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for vc in VehicleClass:
        vals = [m * 3.6 for c, m in means.values() if c == vc]
        if vals:
            ax.hist(vals, bins=20, alpha=0.5, label=vc.name.lower())
    ax.set_xlabel("mean speed (km/h)")
    ax.set_ylabel("vehicles")
    ax.legend()
    _save(fig, path)


def window_series(path, windows):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    t = [w.window_start for w in windows]
    ax.plot(t, [np.nan if w.truck_density_per_km is None else w.truck_density_per_km for w in windows], "o-")
    ax.set_xlabel("window start (s)")
    ax.set_ylabel("trucks per km")
    _save(fig, path)


def attenuation_plot(path, rows):
    d, auto, truck = zip(*rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(d, auto, label="car obstacle")
    ax.plot(d, truck, label="truck obstacle")
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("added loss (dB)")
    ax.legend()
    _save(fig, path)


def pdr_plot(path, curves):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for cid, c in sorted(curves.items()):
        ax.plot(c.rates, c.pdr, "o-", label=f"class {cid}")
    ax.set_xlabel("data rate (Mbps)")
    ax.set_ylabel("PDR")
    ax.legend()
    _save(fig, path)


def weights_plot(path, pts):
    a = [p.alpha for p in pts]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(a, [p.mean_ld for p in pts], "o-", color="C0")
    ax.set_xlabel("alpha")
    ax.set_ylabel("mean link duration (s)", color="C0")
    ax2 = ax.twinx()
    ax2.plot(a, [p.mean_rate for p in pts], "s--", color="C1")
    ax2.set_ylabel("mean data rate (Mbps)", color="C1")
    _save(fig, path)


def surface_plot(path, rows):
    ca = sorted({r[0] for r in rows})
    cs = sorted({r[1] for r in rows})
    z = np.array([[next(r[2] for r in rows if r[0] == a and r[1] == s) for s in cs] for a in ca])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, a in enumerate(ca):
        ax.plot(cs, z[i] * 1e3, "o-", label=f"ca2={a:g}")
    ax.set_xlabel("service SCV")
    ax.set_ylabel("delay (ms)")
    ax.legend(fontsize="small")
    _save(fig, path)


def compare_plot(path, axis, header, rows):
    x = [float(r[0]) for r in rows]
    col = {h: i for i, h in enumerate(header)}
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.5))
    for name, style in (("sim_e2ed_s", "o-"), ("qna_e2ed_s", "s--"), ("baseline_e2ed_s", "^:")):
        a1.plot(x, [float(r[col[name]] or "nan") * 1e3 for r in rows], style, label=name.replace("_s", ""))
    for name, style in (("sim_throughput_pkt_per_s", "o-"), ("qna_throughput_pkt_per_s", "s--"),
                        ("baseline_throughput_pkt_per_s", "^:")):
        a2.plot(x, [float(r[col[name]] or "nan") for r in rows], style, label=name.replace("_pkt_per_s", ""))
    a1.set_xlabel(axis)
    a1.set_ylabel("E2ED (ms)")
    a2.set_xlabel(axis)
    a2.set_ylabel("throughput (pkt/s)")
    a1.legend(fontsize="small")
    a2.legend(fontsize="small")
    _save(fig, path)
