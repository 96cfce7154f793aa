"""Search for the bandwidth price C that makes the per-sensor relaxed
solutions jointly respect the time-average bandwidth M, then mix the two
bracketing solutions so the constraint holds with equality."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketNotFound, DegenerateBracket, InfeasiblePower
from .model import NetworkSpec
from .sensor import (
    OccupancyMeasure,
    ThresholdPolicy,
    occupancy_stats,
    recover_policy,
    solve_decoupled,
)

BALANCE_TOL = 1e-4


@dataclass
class DualParams:
    initial_step: float = 1.0
    shrink: float = 0.5          # step multiplier on subgradient sign change
    eps_step: float = 1e-4       # terminate once the step falls below this
    max_iters: int = 200

    def __post_init__(self):
        if not (self.initial_step > 0 and 0 < self.shrink < 1 and self.eps_step > 0):
            raise ValueError("invalid dual-search parameters")


@dataclass
class RelaxedSolution:
    """Per-sensor optimum under the time-average bandwidth constraint."""

    occupancies: list        # OccupancyMeasure per sensor (mixed)
    policies: list           # ThresholdPolicy per sensor
    C_l: float               # smaller price, sum b >= M there
    C_u: float               # larger price, sum b <= M there (== C_l when 0 sufficed)
    lam: float               # weight on the C_u solutions
    b: np.ndarray            # per-sensor scheduled-slot fraction
    avg_aoi: np.ndarray      # per-sensor average age
    avg_power: np.ndarray    # per-sensor average power
    trace: list = field(default_factory=list)   # (k, C, d, s) tuples
    n_evals: int = 0

    @property
    def lower_bound(self):
        """Network-average age of the relaxed policy, J(pi_R)."""
        return float(np.mean(self.avg_aoi))


def _solve_all(network: NetworkSpec, C: float, X: int, backend: str, cache: dict):
    key = float(C)
    if key not in cache:
        def solve_one(n):
            try:
                return solve_decoupled(network.sensors[n], C, X=X, backend=backend)
            except InfeasiblePower as e:
                e.sensor = n
                raise
        # independent per-sensor problems; HiGHS does its work outside the GIL
        with ThreadPoolExecutor(max_workers=min(network.N, 8)) as ex:
            cache[key] = list(ex.map(solve_one, range(network.N)))
    return cache[key]


def evaluate_subgradient(network: NetworkSpec, C: float, X: int,
                         backend: str = "highs", cache: dict = None):
    """Per-sensor scheduled fractions at price C and their excess over M."""
    cache = {} if cache is None else cache
    occs = _solve_all(network, C, X, backend, cache)
    b = np.array([occupancy_stats(o, s.channel)["sched_fraction"]
                  for o, s in zip(occs, network.sensors)])
    return float(b.sum() - network.bandwidth), b


def search_multipliers(network: NetworkSpec, params: DualParams = None,
                       X: int = None, backend: str = "highs", cache: dict = None):
    """Subgradient iteration C <- max(0, C + s*d) with step halving on
    sign flips, starting from C = 0. Returns a dict with either a single
    price ('C': 0.0) or a bracket C_l < C_u with
    sum b(C_l) >= M >= sum b(C_u), plus the evaluation trace."""
    params = params or DualParams()
    if X is None:
        raise ValueError("pass an explicit truncation age X")
    cache = {} if cache is None else cache
    M = network.bandwidth
    evals = {}   # C -> sum b
    trace = []

    def bsum(C):
        if C not in evals:
            d, _ = evaluate_subgradient(network, C, X, backend, cache)
            evals[C] = d + M
        return evals[C]

    C = 0.0
    s = params.initial_step
    d_prev = None
    for k in range(1, params.max_iters + 1):
        d = bsum(C) - M
        trace.append((k, C, d, s))
        if k == 1 and d <= 0:
            return {"C": 0.0, "trace": trace, "evals": evals, "cache": cache}
        if d_prev is not None and d_prev * d < 0:
            s *= params.shrink
        if s < params.eps_step:
            break
        C = max(0.0, C + s * d)
        d_prev = d

    over = {c: v for c, v in evals.items() if v >= M}
    under = {c: v for c, v in evals.items() if v < M}
    # exact balance: single price
    for c, v in evals.items():
        if abs(v - M) <= 1e-12:
            return {"C": float(c), "trace": trace, "evals": evals, "cache": cache}
    pairs = [(cl, cu) for cl in over for cu in under if cl < cu]
    if not pairs:
        raise BracketNotFound(
            f"no bracketing prices after {len(trace)} iterations; trace={trace}")
    C_l, C_u = min(pairs, key=lambda t: t[1] - t[0])
    return {"C_l": float(C_l), "C_u": float(C_u), "trace": trace,
            "evals": evals, "cache": cache}


def mixing_weight(b_sum_u: float, b_sum_l: float, M: float) -> float:
    """Weight on the higher-price solution that lands the mixture exactly
    on the bandwidth M."""
    if abs(b_sum_u - b_sum_l) < 1e-12:
        raise DegenerateBracket("bracket endpoints use identical bandwidth")
    lam = (M - b_sum_l) / (b_sum_u - b_sum_l)
    return min(max(lam, 0.0), 1.0)


def mix_and_recover(network: NetworkSpec, occ_u: list, occ_l: list, lam: float,
                    trace=None, n_evals: int = 0, C_l: float = None,
                    C_u: float = None) -> RelaxedSolution:
    """Convex combination of the two endpoint occupancies per sensor
    (feasible by convexity) and the policies it induces."""
    occs, pols, b, aoi, power = [], [], [], [], []
    for s, ou, ol in zip(network.sensors, occ_u, occ_l):
        assert ou.X == ol.X, "mixing requires a shared truncation age"
        occ = OccupancyMeasure(X=ou.X, mu=lam * ou.mu + (1 - lam) * ol.mu,
                               y=lam * ou.y + (1 - lam) * ol.y)
        st = occupancy_stats(occ, s.channel)
        occs.append(occ)
        pols.append(recover_policy(occ, s.channel))
        b.append(st["sched_fraction"])
        aoi.append(st["avg_aoi"])
        power.append(st["avg_power"])
    return RelaxedSolution(
        occupancies=occs, policies=pols, C_l=C_l, C_u=C_u, lam=lam,
        b=np.array(b), avg_aoi=np.array(aoi), avg_power=np.array(power),
        trace=list(trace or []), n_evals=n_evals,
    )


def solve_relaxed(network: NetworkSpec, params: DualParams = None,
                  X: int = None, backend: str = "highs") -> RelaxedSolution:
    """Full pipeline: price search, bracket mixing, policy recovery."""
    res = search_multipliers(network, params, X=X, backend=backend)
    cache = res["cache"]
    if "C" in res:
        C = res["C"]
        occs = cache[C]
        return mix_and_recover(network, occs, occs, 1.0,
                               trace=res["trace"], n_evals=len(res["evals"]),
                               C_l=C, C_u=C)
    C_l, C_u = res["C_l"], res["C_u"]
    lam = mixing_weight(res["evals"][C_u], res["evals"][C_l], network.bandwidth)
    return mix_and_recover(network, cache[C_u], cache[C_l], lam,
                           trace=res["trace"], n_evals=len(res["evals"]),
                           C_l=C_l, C_u=C_u)


def export_trace_csv(path, trace):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["k", "C", "d", "s"])
        w.writerows(trace)
