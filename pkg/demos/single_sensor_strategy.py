"""Walk through the single-sensor problem: solve the decoupled LP for a
four-state channel at several loss levels, recover the scheduling strategy
and show its threshold shape.

Run:  python demos/single_sensor_strategy.py
"""

import numpy as np

from aoi_sched.model import ChannelModel, SensorSpec, gamma
from aoi_sched.sensor import (
    auto_truncation,
    occupancy_stats,
    recover_policy,
    solve_decoupled,
)

ETA = [0.25, 0.25, 0.25, 0.25]
OMEGA = [2.0, 4.0, 8.0, 16.0]
BUDGET = 1.5  # a fifth of the always-schedule power


def main():
    print("eps    avg AoI   avg power  sched frac  thresholds by state")
    print("-" * 64)
    for eps in (0.0, 0.2, 0.4, 0.6):
        model = ChannelModel(eta=ETA, eps=[eps] * 4, omega=OMEGA)
        spec = SensorSpec(channel=model, power_budget=BUDGET)
        X = auto_truncation(spec)
        occ = solve_decoupled(spec, 0.0, X=X)
        st = occupancy_stats(occ, model)
        pol = recover_policy(occ, model)
        th = pol.deterministic_thresholds()
        print(f"{eps:.1f}   {st['avg_aoi']:8.4f}  {st['avg_power']:9.4f}  "
              f"{st['sched_fraction']:10.4f}  {th}")

    # zoom in on one strategy: cheap channel states schedule early, the
    # expensive ones wait until the age justifies the power
    eps = 0.2
    model = ChannelModel(eta=ETA, eps=[eps] * 4, omega=OMEGA)
    spec = SensorSpec(channel=model, power_budget=BUDGET)
    occ = solve_decoupled(spec, 0.0, X=auto_truncation(spec))
    pol = recover_policy(occ, model)
    print(f"\nscheduling probabilities at eps={eps} "
          f"(rows: age 1..12, cols: channel state)")
    with np.printoptions(precision=2, suppress=True):
        print(pol.p[:12])
    print(f"\nthreshold structure holds: {pol.is_threshold()}")
    print(f"capture probability gamma = {gamma(model):.4f}")


if __name__ == "__main__":
    main()
