"""Independent reference implementations used only by the tests.

Nothing here imports the package under test.
"""

import math

import numpy as np


def backoff_slot_sim(n, cw, slots, reps, seed=0):
    """Slot-level simulation of n saturated stations with a constant window.

    Each station draws a backoff uniformly from {0, .., cw-1}, counts it
    down over slots and transmits when it reaches zero; after every
    transmission (success or collision) it redraws. `reps` independent
    replications run side by side. Returns per-replication counts
    (idle, success, collision) over `slots` slots.
    """
    rng = np.random.default_rng(seed)
    counters = rng.integers(0, cw, (reps, n))
    idle = np.zeros(reps, dtype=int)
    succ = np.zeros(reps, dtype=int)
    coll = np.zeros(reps, dtype=int)
    for _ in range(slots):
        tx = counters == 0
        k = tx.sum(axis=1)
        idle += k == 0
        succ += k == 1
        coll += k > 1
        counters -= 1
        counters[tx] = rng.integers(0, cw, int(k.sum()))
    return idle, succ, coll


def replicate_mean_se(values):
    x = np.asarray(values, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def gg1_lindley(lam, mu, ca2, cs2, departures, seed=0, warmup=10_000):
    """Mean waiting time in queue of a FIFO G/G/1 with Gamma interarrival and
    service times, by the Lindley recursion."""
    rng = np.random.default_rng(seed)
    total = departures + warmup
    a = rng.gamma(1.0 / ca2, ca2 / lam, total)
    s = rng.gamma(1.0 / cs2, cs2 / mu, total)
    w = 0.0
    acc = 0.0
    for k in range(1, total):
        w = max(0.0, w + s[k - 1] - a[k])
        if k >= warmup:
            acc += w
    return acc / (total - warmup)


def knife_edge_hand(v):
    if v <= -0.7:
        return 0.0
    return 6.9 + 20 * math.log10(math.sqrt((v - 0.1) ** 2 + 1) + v - 0.1)


def mm1_chain_delay(lams, taus, hop_rates):
    """All-Poisson tandem: sum of M/M/1 queueing delays plus one transfer per hop."""
    total = 0.0
    for lam, tau, h in zip(lams, taus, hop_rates):
        rho = lam / tau
        total += rho / (tau * (1 - rho)) + 1.0 / h
    return total
