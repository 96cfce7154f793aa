"""Online scheduling rules: the bandwidth-truncated randomized policy,
its uncapped relaxed counterpart, and the Greedy-Whittle baseline.

Randomized selection draws one uniform per sensor in index order, then
(when the candidate set exceeds M) one selection key per sensor; the M
smallest keys among candidates form the scheduled subset. Fixed draw
counts keep random streams aligned across compared policies.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateLoss


def truncated_schedule(ages, estimates, policies, M, rng):
    """Candidate set I holds sensor n with probability p_n(x_n, q_n); if
    |I| > M a uniformly random M-subset of I is scheduled."""
    n = len(ages)
    u = rng.random(n)
    cand = np.array([u[i] < policies[i].prob(ages[i], estimates[i])
                     for i in range(n)])
    keys = rng.random(n)
    idx = np.flatnonzero(cand)
    if len(idx) <= M:
        return set(int(i) for i in idx)
    chosen = idx[np.argsort(keys[idx], kind="stable")[:M]]
    return set(int(i) for i in chosen)


def relaxed_schedule(ages, estimates, policies, rng):
    """Independent Bernoulli per sensor, no cardinality cap."""
    n = len(ages)
    u = rng.random(n)
    rng.random(n)  # selection keys, drawn for stream alignment
    return set(i for i in range(n)
               if u[i] < policies[i].prob(ages[i], estimates[i]))


def whittle_index(x: int, eps_bar: float) -> float:
    """Priority score (1-e)x(x + (1+e)/(1-e)) = (1-e)x^2 + (1+e)x."""
    if eps_bar >= 1.0:
        raise DegenerateLoss(f"loss probability {eps_bar} >= 1")
    return (1.0 - eps_bar) * x * x + (1.0 + eps_bar) * x


def greedy_whittle_schedule(ages, eps_bar, costs, used_energy, budgets, t, M):
    """Top-M eligible sensors by Whittle index, lower index wins ties.

    Sensor n is eligible when its running energy ledger can absorb the
    current slot's cost: used_energy[n] + costs[n] <= budgets[n] * t.
    """
    n = len(ages)
    w = np.array([whittle_index(ages[i], eps_bar[i]) for i in range(n)])
    eligible = np.asarray(used_energy) + np.asarray(costs) <= np.asarray(budgets) * t
    w = np.where(eligible, w, -np.inf)
    order = np.argsort(-w, kind="stable")   # stable sort = lower index on ties
    out = set()
    for i in order:
        if len(out) >= M or not eligible[i]:
            break
        out.add(int(i))
    return out
