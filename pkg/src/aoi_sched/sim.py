"""Slot-based network simulator.

A numba kernel executes the per-slot loop; a pure-python twin
(`run_simulation(..., reference=True)` or `trace=True`) reproduces it
draw-for-draw and backs the per-slot trace export. Every slot consumes
exactly four uniforms per sensor (channel, candidate, success, selection
key) in fixed order, so two policies simulated with the same seed see
identical channel states and identical loss realizations: common random
numbers for low-variance comparisons.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import NetworkSpec, gamma
from .sensor import ThresholdPolicy

KIND_TRUNCATED = 0
KIND_RELAXED = 1
KIND_WHITTLE = 2

AGE_HIST_BINS = 1024  # last bin collects the overflow


@dataclass(frozen=True)
class TruncatedPolicy:
    """Randomized per-sensor policy capped to M uploads per slot."""
    policies: tuple  # ThresholdPolicy per sensor
    kind = KIND_TRUNCATED


@dataclass(frozen=True)
class RelaxedPolicy:
    """Uncapped independent Bernoulli scheduling (pi_R)."""
    policies: tuple
    kind = KIND_RELAXED


@dataclass(frozen=True)
class GreedyWhittlePolicy:
    """Top-M eligible sensors by Whittle index."""
    eps_bar: tuple   # per-sensor flat loss probability
    kind = KIND_WHITTLE


@dataclass
class SimConfig:
    horizon: int
    seed: int = 0
    warmup: int = None   # defaults to horizon // 10

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.warmup is None:
            self.warmup = self.horizon // 10
        if not (0 <= self.warmup < self.horizon):
            raise ValueError("need 0 <= warmup < horizon")


@dataclass
class SimMetrics:
    avg_aoi: float
    per_sensor_aoi: np.ndarray
    per_sensor_power: np.ndarray
    bandwidth_hist: np.ndarray    # counts of #scheduled per post-warmup slot
    aoi_hist: np.ndarray          # (N, AGE_HIST_BINS)
    max_bandwidth: int            # over every slot, warmup included
    horizon: int
    warmup: int
    seed: int
    ci_half_width: float = None   # filled by run_replications

    def to_json(self, path):
        doc = {
            "avg_aoi": self.avg_aoi,
            "per_sensor_aoi": self.per_sensor_aoi.tolist(),
            "per_sensor_power": self.per_sensor_power.tolist(),
            "bandwidth_hist": self.bandwidth_hist.tolist(),
            "aoi_hist": self.aoi_hist.tolist(),
            "max_bandwidth": self.max_bandwidth,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "seed": self.seed,
            "ci_half_width": self.ci_half_width,
        }
        with open(path, "w") as f:
            json.dump(doc, f)


def _pack_policies(policies, N, Q):
    """Stack per-sensor scheduling probabilities into (N, XC, Q) with an
    all-ones top row standing in for every age beyond the truncation."""
    xc = max(p.X for p in policies) + 1
    pol = np.ones((N, xc, Q))
    for n, p in enumerate(policies):
        pol[n, :p.X, :] = p.p
        pol[n, p.X:, :] = 1.0
    return pol


@njit(cache=True)
def _kernel(kind, T, warmup, seed, M, eta_cum, eps, omega, pol, eps_bar, budgets):
    N, Q = eta_cum.shape
    xc = pol.shape[1]
    np.random.seed(seed)

    ages = np.ones(N, dtype=np.int64)
    energy_all = np.zeros(N)        # ledger from slot 1 (whittle eligibility)
    energy_pw = np.zeros(N)         # post-warmup accounting
    sum_age = np.zeros(N)
    bw_hist = np.zeros(N + 1, dtype=np.int64)
    age_hist = np.zeros((N, AGE_HIST_BINS), dtype=np.int64)
    max_bw = 0

    q = np.empty(N, dtype=np.int64)
    cand = np.empty(N, dtype=np.bool_)
    succ = np.empty(N, dtype=np.bool_)
    keys = np.empty(N)
    sched = np.empty(N, dtype=np.bool_)

    for t in range(1, T + 1):
        # fixed draw order: channel, candidate, success, selection key
        for n in range(N):
            u = np.random.random()
            qi = 0
            while qi < Q - 1 and u >= eta_cum[n, qi]:
                qi += 1
            q[n] = qi
        for n in range(N):
            u = np.random.random()
            row = ages[n] if ages[n] < xc else xc
            cand[n] = u < pol[n, row - 1, q[n]]
        for n in range(N):
            succ[n] = np.random.random() < 1.0 - eps[n, q[n]]
        for n in range(N):
            keys[n] = np.random.random()

        sched[:] = False
        if kind == 1:
            for n in range(N):
                sched[n] = cand[n]
        elif kind == 0:
            k = 0
            for n in range(N):
                if cand[n]:
                    k += 1
            if k <= M:
                for n in range(N):
                    sched[n] = cand[n]
            else:
                # M smallest keys among candidates = uniform M-subset
                for _ in range(M):
                    best = -1
                    for n in range(N):
                        if cand[n] and not sched[n]:
                            if best < 0 or keys[n] < keys[best]:
                                best = n
                    sched[best] = True
        else:
            # greedy whittle: top-M eligible, lower index wins ties
            for _ in range(M):
                best = -1
                bw = -1.0
                for n in range(N):
                    if sched[n]:
                        continue
                    if energy_all[n] + omega[n, q[n]] > budgets[n] * t:
                        continue
                    w = (1.0 - eps_bar[n]) * ages[n] * ages[n] + (1.0 + eps_bar[n]) * ages[n]
                    if w > bw:
                        bw = w
                        best = n
                if best < 0:
                    break
                sched[best] = True

        nsched = 0
        for n in range(N):
            if sched[n]:
                nsched += 1
        if nsched > max_bw:
            max_bw = nsched

        counted = t > warmup
        if counted:
            bw_hist[nsched] += 1
        for n in range(N):
            if counted:
                sum_age[n] += ages[n]
                b = ages[n] if ages[n] < AGE_HIST_BINS else AGE_HIST_BINS
                age_hist[n, b - 1] += 1
            if sched[n]:
                cost = omega[n, q[n]]
                energy_all[n] += cost
                if counted:
                    energy_pw[n] += cost
                if succ[n]:
                    ages[n] = 1
                    continue
            ages[n] += 1

    return sum_age, energy_pw, bw_hist, age_hist, max_bw


def _reference_kernel(kind, T, warmup, seed, M, eta_cum, eps, omega, pol,
                      eps_bar, budgets, trace=None):
    """Pure-python twin of the numba kernel (same draws, same decisions)."""
    N, Q = eta_cum.shape
    xc = pol.shape[1]
    rs = np.random.RandomState(seed)

    ages = np.ones(N, dtype=np.int64)
    energy_all = np.zeros(N)
    energy_pw = np.zeros(N)
    sum_age = np.zeros(N)
    bw_hist = np.zeros(N + 1, dtype=np.int64)
    age_hist = np.zeros((N, AGE_HIST_BINS), dtype=np.int64)
    max_bw = 0

    for t in range(1, T + 1):
        u1 = rs.random_sample(N)
        u2 = rs.random_sample(N)
        u3 = rs.random_sample(N)
        keys = rs.random_sample(N)
        q = np.minimum(np.array([np.searchsorted(eta_cum[n], u1[n], side="right")
                                 for n in range(N)]), Q - 1)
        rows = np.minimum(ages, xc) - 1
        p = pol[np.arange(N), rows, q]
        cand = u2 < p
        succ = u3 < 1.0 - eps[np.arange(N), q]

        if kind == KIND_RELAXED:
            sched = cand.copy()
        elif kind == KIND_TRUNCATED:
            idx = np.flatnonzero(cand)
            sched = np.zeros(N, dtype=bool)
            if len(idx) <= M:
                sched[idx] = True
            else:
                sched[idx[np.argsort(keys[idx], kind="stable")[:M]]] = True
        else:
            w = (1.0 - eps_bar) * ages * ages + (1.0 + eps_bar) * ages
            eligible = energy_all + omega[np.arange(N), q] <= budgets * t
            w = np.where(eligible, w, -np.inf)
            order = np.argsort(-w, kind="stable")
            sched = np.zeros(N, dtype=bool)
            for i in order[:M]:
                if eligible[i]:
                    sched[i] = True

        nsched = int(sched.sum())
        max_bw = max(max_bw, nsched)
        counted = t > warmup
        if counted:
            bw_hist[nsched] += 1
            sum_age += ages
            bins = np.minimum(ages, AGE_HIST_BINS) - 1
            for n in range(N):
                age_hist[n, bins[n]] += 1
        cost = np.where(sched, omega[np.arange(N), q], 0.0)
        energy_all += cost
        if counted:
            energy_pw += cost
        if trace is not None:
            for n in range(N):
                trace.append((t, n + 1, int(q[n]) + 1, int(sched[n]),
                              int(sched[n] and succ[n]), int(ages[n])))
        delivered = sched & succ
        ages = np.where(delivered, 1, ages + 1)

    return sum_age, energy_pw, bw_hist, age_hist, max_bw


def _network_arrays(network: NetworkSpec):
    N = network.N
    Q = max(s.channel.Q for s in network.sensors)
    eta_cum = np.ones((N, Q))
    eps = np.zeros((N, Q))
    omega = np.zeros((N, Q))
    for n, s in enumerate(network.sensors):
        q = s.channel.Q
        eta_cum[n, :q] = s.channel.eta_cum
        eta_cum[n, q:] = 1.0
        eps[n, :q] = s.channel.eps
        omega[n, :q] = s.channel.omega
        omega[n, q:] = s.channel.omega[-1]
    return eta_cum, eps, omega


def run_simulation(network: NetworkSpec, policy, config: SimConfig,
                   reference: bool = False, trace_path=None) -> SimMetrics:
    """Simulate one run; bit-reproducible for a fixed seed."""
    N = network.N
    eta_cum, eps, omega = _network_arrays(network)
    Q = eta_cum.shape[1]
    kind = policy.kind
    if kind == KIND_WHITTLE:
        pol = np.ones((N, 1, Q))
        eps_bar = np.asarray(policy.eps_bar, dtype=float)
    else:
        pol = _pack_policies(policy.policies, N, Q)
        eps_bar = np.zeros(N)
    budgets = np.array([s.power_budget for s in network.sensors])
    T, warmup = config.horizon, config.warmup

    trace = [] if trace_path else None
    if reference or trace_path:
        out = _reference_kernel(kind, T, warmup, config.seed, network.bandwidth,
                                eta_cum, eps, omega, pol, eps_bar, budgets, trace)
    else:
        out = _kernel(kind, T, warmup, config.seed, network.bandwidth,
                      eta_cum, eps, omega, pol, eps_bar, budgets)
    sum_age, energy_pw, bw_hist, age_hist, max_bw = out
    counted = T - warmup
    per_aoi = sum_age / counted
    if trace_path:
        with open(trace_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["slot", "sensor", "q", "scheduled", "success", "age"])
            w.writerows(trace)
    return SimMetrics(
        avg_aoi=float(per_aoi.mean()),
        per_sensor_aoi=per_aoi,
        per_sensor_power=energy_pw / counted,
        bandwidth_hist=bw_hist,
        aoi_hist=age_hist,
        max_bandwidth=int(max_bw),
        horizon=T, warmup=warmup, seed=config.seed,
    )


def replication_seeds(seed: int, reps: int):
    """Deterministic per-replication seeds; identical across policies so
    comparisons ride on common random numbers."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(reps)]


def run_replications(network: NetworkSpec, policy, config: SimConfig, reps: int):
    """Independent replications; returns (per-rep metrics, mean avg AoI,
    95% CI half-width)."""
    runs = []
    for s in replication_seeds(config.seed, reps):
        cfg = SimConfig(horizon=config.horizon, seed=s, warmup=config.warmup)
        runs.append(run_simulation(network, policy, cfg))
    vals = np.array([m.avg_aoi for m in runs])
    ci = 1.96 * vals.std(ddof=1) / np.sqrt(reps) if reps > 1 else float("nan")
    for m in runs:
        m.ci_half_width = float(ci)
    return runs, float(vals.mean()), float(ci)


def analytic_lower_bound(relaxed) -> float:
    """Network-average age of the relaxed solution, J(pi_R)."""
    return relaxed.lower_bound


def metrics_to_csv(path, metrics_list):
    """One row per replication."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["seed", "avg_aoi", "max_bandwidth"] +
                   [f"power_{n+1}" for n in range(len(metrics_list[0].per_sensor_power))])
        for m in metrics_list:
            w.writerow([m.seed, m.avg_aoi, m.max_bandwidth] +
                       list(m.per_sensor_power))
