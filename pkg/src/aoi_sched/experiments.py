"""Experiment presets: single-sensor strategy/AoI table, asymptotic gap
sweep, and the Greedy-Whittle comparison, plus a generic runner for
user-supplied network specs. All outputs are CSV plus a JSON manifest."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dual import DualParams, export_trace_csv, solve_relaxed
from .model import ChannelModel, NetworkSpec, SensorSpec, load_network
from .sensor import (
    auto_truncation,
    occupancy_stats,
    recover_policy,
    solve_decoupled,
)
from .sim import (
    GreedyWhittlePolicy,
    RelaxedPolicy,
    SimConfig,
    TruncatedPolicy,
    metrics_to_csv,
    run_replications,
    run_simulation,
)

TABLE1_EPS = (0.0, 0.2, 0.4, 0.6)
FIG4_ETA = (0.135, 0.239, 0.232, 0.394)
FIG4_OMEGA = (1.0, 2.0, 3.0, 4.0)
# the sweep setups leave the per-state loss vector open; losses grow with
# the fading state here
FIG4_EPS = (0.1, 0.2, 0.3, 0.4)
FIG4_DEFAULT_N = (5, 10, 20, 40)
FIG5_DEFAULT_N = (5, 10, 20)
FIG4_X = 120
FIG5_X = 250
# Sweep instances need bandwidth prices far above 1; the default unit step
# creeps toward the crossing without ever flipping sign, so the preset
# drivers start wider when the caller leaves the dual knobs untouched.
SWEEP_DUAL_STEP = 25.0


@dataclass
class RunConfig:
    preset: str
    T: int = 100_000
    seed: int = 7
    reps: int = 10
    out_dir: str = "results"
    N_values: tuple = None
    X: int = None                 # truncation override
    dual: DualParams = field(default_factory=DualParams)
    spec_path: str = None         # for the custom preset
    trace: bool = False
    lp_backend: str = "highs"


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _manifest(cfg: RunConfig, out_dir, extra=None):
    doc = {
        "preset": cfg.preset,
        "seed": cfg.seed,
        "T": cfg.T,
        "reps": cfg.reps,
        "X": cfg.X,
        "dual": {"initial_step": cfg.dual.initial_step, "shrink": cfg.dual.shrink,
                 "eps_step": cfg.dual.eps_step, "max_iters": cfg.dual.max_iters},
        "tool_version": __version__,
    }
    if cfg.N_values:
        doc["N_values"] = list(cfg.N_values)
    if cfg.spec_path:
        doc["spec_path"] = str(cfg.spec_path)
    if extra:
        doc.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)


# Budget factor for the single-sensor table/strategy presets. The source
# experiment quotes half the always-schedule power (3.75), but its published
# AoI figures are only reproducible with 0.2 * sum(eta*omega) = 1.5; at 3.75
# the true optimum is far lower (see README). We keep the reproducing value.
TABLE1_BUDGET_FACTOR = 0.2


def table1_sensor(eps: float, budget_factor: float = TABLE1_BUDGET_FACTOR) -> SensorSpec:
    """Q=4 channel, uniform estimates, omega = 2^q."""
    model = ChannelModel(eta=[0.25] * 4, eps=[eps] * 4, omega=[2.0, 4.0, 8.0, 16.0])
    return SensorSpec(channel=model, power_budget=budget_factor * model.mean_power)


def solve_table1_point(eps: float, X: int = None, backend: str = "highs"):
    spec = table1_sensor(eps)
    X = X or auto_truncation(spec)
    occ = solve_decoupled(spec, 0.0, X=X, backend=backend)
    st = occupancy_stats(occ, spec.channel)
    pol = recover_policy(occ, spec.channel)
    return spec, occ, st, pol


def run_table1(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    for eps in TABLE1_EPS:
        spec, occ, st, pol = solve_table1_point(eps, cfg.X, cfg.lp_backend)
        net = NetworkSpec(sensors=[spec], bandwidth=1)
        m = run_simulation(net, TruncatedPolicy((pol,)),
                           SimConfig(horizon=cfg.T, seed=cfg.seed))
        rows.append([eps, st["avg_aoi"], m.avg_aoi, st["avg_power"],
                     float(m.per_sensor_power[0]), st["sched_fraction"]])
    path = os.path.join(cfg.out_dir, "table1.csv")
    _write_csv(path, ["eps", "analytic_aoi", "simulated_aoi",
                      "analytic_power", "simulated_power", "sched_fraction"], rows)
    _manifest(cfg, cfg.out_dir)
    return {"table1": path, "rows": rows}


def run_fig3(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    for eps in TABLE1_EPS:
        spec, occ, st, pol = solve_table1_point(eps, cfg.X, cfg.lp_backend)
        for x in range(1, pol.X + 1):
            for q in range(1, spec.channel.Q + 1):
                rows.append([x, q, eps, pol.prob(x, q)])
    path = os.path.join(cfg.out_dir, "fig3_strategy.csv")
    _write_csv(path, ["x", "q", "eps", "p"], rows)
    _manifest(cfg, cfg.out_dir)
    return {"fig3": path, "rows": rows}


def fig4_network(N: int) -> NetworkSpec:
    """Identical channels, power factors rho spanning [0.2, 1.6] around
    the minimum budget E_G that round-robin-style scheduling needs."""
    assert N % 5 == 0, "fig4 sweep keeps M/N = 1/5"
    M = N // 5
    model = ChannelModel(eta=FIG4_ETA, eps=FIG4_EPS, omega=FIG4_OMEGA)
    e_g = (M / N) * model.mean_power
    sensors = []
    for n in range(N):
        rho = 0.2 + 1.4 * n / (N - 1)
        sensors.append(SensorSpec(channel=model, power_budget=rho * e_g))
    return NetworkSpec(sensors=sensors, bandwidth=M)


def run_fig4(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    Ns = cfg.N_values or FIG4_DEFAULT_N
    X = cfg.X or FIG4_X
    dual = cfg.dual
    if dual == DualParams():
        dual = DualParams(initial_step=SWEEP_DUAL_STEP)
    rows = []
    details = {}
    for N in Ns:
        net = fig4_network(N)
        rel = solve_relaxed(net, dual, X=X, backend=cfg.lp_backend)
        pol = TruncatedPolicy(tuple(rel.policies))
        runs, j_hat, ci = run_replications(net, pol,
                                           SimConfig(horizon=cfg.T, seed=cfg.seed),
                                           cfg.reps)
        j_r = rel.lower_bound
        rows.append([N, j_hat, j_r, j_hat - j_r, ci])
        details[N] = {"relaxed": rel, "runs": runs}
        if cfg.trace:
            export_trace_csv(os.path.join(cfg.out_dir, f"fig4_dual_trace_N{N}.csv"),
                             rel.trace)
            metrics_to_csv(os.path.join(cfg.out_dir, f"fig4_reps_N{N}.csv"), runs)
    path = os.path.join(cfg.out_dir, "fig4_gap.csv")
    _write_csv(path, ["N", "J_hat", "J_R", "gap", "ci"], rows)
    _manifest(cfg, cfg.out_dir, {"X_used": X, "dual_step_used": dual.initial_step})
    return {"fig4": path, "rows": rows, "details": details}


def fig5_network(N: int, M: int = 2) -> NetworkSpec:
    """Flat per-sensor loss (n-1)/N across estimates; every sensor gets
    the budget E_G the index baseline naturally needs."""
    model0 = ChannelModel(eta=FIG4_ETA, eps=[0.0] * 4, omega=FIG4_OMEGA)
    e_g = (M / N) * model0.mean_power
    sensors = []
    for n in range(1, N + 1):
        eb = (n - 1) / N
        model = ChannelModel(eta=FIG4_ETA, eps=[eb] * 4, omega=FIG4_OMEGA)
        sensors.append(SensorSpec(channel=model, power_budget=e_g))
    return NetworkSpec(sensors=sensors, bandwidth=M)


def run_fig5(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    Ns = cfg.N_values or FIG5_DEFAULT_N
    X = cfg.X or FIG5_X
    dual = cfg.dual
    if dual == DualParams():
        # Bandwidth prices run into the hundreds on the tight flat budgets
        # here; the unit step cannot reach a sign flip in the iteration
        # budget, so widen it unless the caller asked for something else.
        dual = DualParams(initial_step=SWEEP_DUAL_STEP)
    rows = []
    details = {}
    for N in Ns:
        net = fig5_network(N)
        rel = solve_relaxed(net, dual, X=X, backend=cfg.lp_backend)
        pol = TruncatedPolicy(tuple(rel.policies))
        sim_cfg = SimConfig(horizon=cfg.T, seed=cfg.seed)
        runs_hat, j_hat, ci_hat = run_replications(net, pol, sim_cfg, cfg.reps)
        eps_bar = tuple((n - 1) / N for n in range(1, N + 1))
        runs_gw, j_gw, ci_gw = run_replications(net, GreedyWhittlePolicy(eps_bar),
                                                sim_cfg, cfg.reps)
        rows.append([N, j_hat, ci_hat, j_gw, ci_gw])
        details[N] = {"relaxed": rel, "runs_hat": runs_hat, "runs_whittle": runs_gw}
    path = os.path.join(cfg.out_dir, "fig5_compare.csv")
    _write_csv(path, ["N", "J_hat", "ci_hat", "J_whittle", "ci_whittle"], rows)
    _manifest(cfg, cfg.out_dir, {"X_used": X, "dual_step_used": dual.initial_step})
    return {"fig5": path, "rows": rows, "details": details}


def run_custom(cfg: RunConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = load_network(cfg.spec_path)
    X = cfg.X
    if X is None:
        X = max(auto_truncation(s) for s in net.sensors)
    rel = solve_relaxed(net, cfg.dual, X=X, backend=cfg.lp_backend)
    pol = TruncatedPolicy(tuple(rel.policies))
    runs, j_hat, ci = run_replications(net, pol,
                                       SimConfig(horizon=cfg.T, seed=cfg.seed),
                                       cfg.reps)
    rows = [[net.N, net.bandwidth, j_hat, rel.lower_bound,
             j_hat - rel.lower_bound, ci]]
    path = os.path.join(cfg.out_dir, "custom.csv")
    _write_csv(path, ["N", "M", "J_hat", "J_R", "gap", "ci"], rows)
    if cfg.trace:
        export_trace_csv(os.path.join(cfg.out_dir, "custom_dual_trace.csv"), rel.trace)
        metrics_to_csv(os.path.join(cfg.out_dir, "custom_reps.csv"), runs)
    _manifest(cfg, cfg.out_dir, {"X_used": X})
    return {"custom": path, "rows": rows, "relaxed": rel, "runs": runs}


PRESETS = {
    "table1": run_table1,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "custom": run_custom,
}


def run_experiment(cfg: RunConfig) -> dict:
    if cfg.preset not in PRESETS:
        raise ValueError(f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}")
    if cfg.preset == "custom" and not cfg.spec_path:
        raise ValueError("custom preset needs --spec FILE")
    return PRESETS[cfg.preset](cfg)
