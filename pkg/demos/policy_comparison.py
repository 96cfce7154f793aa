"""Simulate the three online policies on one network under common random
numbers and compare their average age against the analytic lower bound.

Run:  python demos/policy_comparison.py
"""

import numpy as np

from aoi_sched.dual import DualParams, solve_relaxed
from aoi_sched.model import ChannelModel, NetworkSpec, SensorSpec
from aoi_sched.sim import (
    GreedyWhittlePolicy,
    RelaxedPolicy,
    SimConfig,
    TruncatedPolicy,
    analytic_lower_bound,
    run_replications,
)

N, M = 10, 2
T, REPS = 100_000, 10
X = 120


def build_network():
    sensors = []
    for n in range(1, N + 1):
        eb = (n - 1) / N
        model = ChannelModel(eta=[0.135, 0.239, 0.232, 0.394],
                             eps=[eb] * 4, omega=[1.0, 2.0, 3.0, 4.0])
        budget = (M / N) * model.mean_power
        sensors.append(SensorSpec(channel=model, power_budget=budget))
    return NetworkSpec(sensors=sensors, bandwidth=M)


def main():
    net = build_network()
    print(f"solving the relaxed problem for N={N}, M={M} ...")
    # prices on this instance sit far above 1, start the search wide
    rel = solve_relaxed(net, DualParams(initial_step=25.0), X=X)
    pols = tuple(rel.policies)
    eps_bar = tuple((n - 1) / N for n in range(1, N + 1))

    cfg = SimConfig(horizon=T, seed=7)
    candidates = [
        ("truncated pi_hat", TruncatedPolicy(pols)),
        ("relaxed pi_R (no cap)", RelaxedPolicy(pols)),
        ("greedy-whittle", GreedyWhittlePolicy(eps_bar)),
    ]
    print(f"\n{REPS} replications at T={T}, shared seeds:\n")
    print(f"{'policy':<24} {'avg AoI':>9} {'95% ci':>8} {'max bw':>7}")
    print("-" * 52)
    for name, policy in candidates:
        runs, mean, ci = run_replications(net, policy, cfg, REPS)
        max_bw = max(m.max_bandwidth for m in runs)
        print(f"{name:<24} {mean:9.4f} {ci:8.4f} {max_bw:7d}")
    bound = analytic_lower_bound(rel)
    print("-" * 52)
    print(f"{'analytic bound J(pi_R)':<24} {bound:9.4f}")
    print(f"\nthe capped policy pays a small age premium over pi_R; the bound")
    print(f"is attained by pi_R in simulation up to sampling noise.")


if __name__ == "__main__":
    main()
