"""Show the bandwidth-price machinery step by step on a small network:
subgradient iterations, the bracket, the mixing weight, and the feasible
relaxed solution they produce.

Run:  python demos/dual_search_walkthrough.py
"""

import numpy as np

from aoi_sched.dual import mixing_weight, search_multipliers, solve_relaxed
from aoi_sched.model import ChannelModel, NetworkSpec, SensorSpec

X = 80


def build_network(N=6, M=2):
    sensors = []
    for n in range(N):
        eps = 0.1 + 0.6 * n / (N - 1)
        model = ChannelModel(eta=[0.5, 0.5], eps=[eps, eps], omega=[1.0, 2.0])
        sensors.append(SensorSpec(channel=model,
                                  power_budget=0.6 * model.mean_power))
    return NetworkSpec(sensors=sensors, bandwidth=M)


def main():
    net = build_network()
    res = search_multipliers(net, X=X)

    print("subgradient trace (k, price C, excess d = sum b - M, step s):")
    for k, C, d, s in res["trace"][:12]:
        print(f"  k={k:<3d} C={C:8.4f}  d={d:+.5f}  s={s:.4f}")
    if len(res["trace"]) > 12:
        print(f"  ... {len(res['trace']) - 12} more iterations")

    if "C" in res:
        print(f"\nprice C=0 already fits the bandwidth, nothing to mix")
        return

    C_l, C_u = res["C_l"], res["C_u"]
    b_l, b_u = res["evals"][C_l], res["evals"][C_u]
    lam = mixing_weight(b_u, b_l, net.bandwidth)
    print(f"\nbracket: sum b({C_l:.6f}) = {b_l:.5f} >= M={net.bandwidth}"
          f" >= sum b({C_u:.6f}) = {b_u:.5f}")
    print(f"mixing weight on the high-price solution: lam = {lam:.5f}")

    sol = solve_relaxed(net, X=X)
    print(f"\nmixed solution: sum b = {sol.b.sum():.8f} (target {net.bandwidth})")
    print(f"per-sensor scheduled fractions: {np.round(sol.b, 4)}")
    print(f"per-sensor average age:        {np.round(sol.avg_aoi, 3)}")
    print(f"network lower bound J(pi_R) = {sol.lower_bound:.4f} "
          f"after {sol.n_evals} LP batch evaluations")


if __name__ == "__main__":
    main()
