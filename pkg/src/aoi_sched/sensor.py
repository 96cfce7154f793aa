"""Per-sensor age-vs-power optimization for a fixed scheduling price C.

The stationary problem is solved as a linear program over the occupancy
measure (mu_x, y_{x,q}) with the age axis truncated at X; ages beyond X
are always scheduled and folded in analytically through the geometric
tail with ratio gamma.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import InfeasiblePower, PolicyRecoveryError, SingularSystem
from .lp import LinearProgram, solve_lp
from .model import ChannelModel, SensorSpec, gamma, transfer_probs

MASS_FLOOR = 1e-9
CLAMP_TOL = 1e-6
THRESHOLD_TOL = 1e-6


def auto_truncation(spec: SensorSpec) -> int:
    """Default truncation age; large enough that doubling it moves the
    optimum by < 1e-6 on the instances this library targets."""
    g = gamma(spec.channel)
    return max(50, math.ceil(20.0 / (1.0 - g) * spec.channel.mean_power / spec.power_budget))


@dataclass
class OccupancyMeasure:
    """Stationary occupancy: mu[x-1] = P(age = x) for x = 1..X and
    y[x-1, q-1] = P(age = x, estimate q, scheduled) for x = 1..X-1,
    with the geometric tail beyond X implied."""

    X: int
    mu: np.ndarray          # shape (X,)
    y: np.ndarray           # shape (X-1, Q)

    def check(self, model: ChannelModel, tol: float = 1e-8):
        g = gamma(model)
        mu, y = self.mu, self.y
        X = self.X
        assert len(mu) == X and y.shape == (X - 1, model.Q)
        total = mu[:-1].sum() + mu[-1] / (1.0 - g)
        assert abs(total - 1.0) <= tol, f"normalization off by {total - 1.0}"
        succ = y @ (1.0 - model.eps)
        assert abs(mu[0] - (succ.sum() + mu[-1])) <= tol
        for x in range(1, X):
            assert abs(mu[x] - (mu[x - 1] - succ[x - 1])) <= tol
        cap = mu[:-1, None] * model.eta[None, :]
        assert np.all(y >= -tol) and np.all(y - cap <= tol)

    def residuals(self, model: ChannelModel):
        """Max violation of each family of stationarity constraints."""
        g = gamma(model)
        mu, y = self.mu, self.y
        succ = y @ (1.0 - model.eps)
        norm = abs(mu[:-1].sum() + mu[-1] / (1.0 - g) - 1.0)
        r1 = abs(mu[0] - (succ.sum() + mu[-1]))
        chain = float(np.max(np.abs(mu[1:] - (mu[:-1] - succ))))
        cap = mu[:-1, None] * model.eta[None, :]
        box = max(float(np.max(-y, initial=0.0)), float(np.max(y - cap, initial=0.0)))
        return {"norm": norm, "reset": r1, "chain": chain, "box": box}


@dataclass
class ThresholdPolicy:
    """Scheduling probabilities p[x-1, q-1] for x = 1..X; ages beyond X
    schedule unconditionally. For each estimate there is a single
    threshold age with at most one fractional boundary state."""

    X: int
    p: np.ndarray           # shape (X, Q)

    def prob(self, x: int, q: int) -> float:
        if x > self.X:
            return 1.0
        return float(self.p[x - 1, q - 1])

    def thresholds(self, tol: float = THRESHOLD_TOL):
        """First age with positive scheduling probability, per estimate
        (X+1 when the policy never schedules below the truncation age)."""
        out = []
        for qi in range(self.p.shape[1]):
            pos = np.flatnonzero(self.p[:, qi] > tol)
            out.append(int(pos[0]) + 1 if len(pos) else self.X + 1)
        return out

    def deterministic_thresholds(self, tol: float = THRESHOLD_TOL):
        """First age scheduled with certainty, per estimate. Unlike
        thresholds() this ignores the fractional boundary state, which
        makes it the stabler notion when comparing policies."""
        out = []
        for qi in range(self.p.shape[1]):
            ones = np.flatnonzero(self.p[:, qi] >= 1.0 - tol)
            out.append(int(ones[0]) + 1 if len(ones) else self.X + 1)
        return out

    def is_threshold(self, tol: float = THRESHOLD_TOL) -> bool:
        for qi in range(self.p.shape[1]):
            col = self.p[:, qi]
            frac = np.flatnonzero((col > tol) & (col < 1.0 - tol))
            if len(frac) > 1:
                return False
            ones = np.flatnonzero(col >= 1.0 - tol)
            zeros = np.flatnonzero(col <= tol)
            if len(ones) and len(zeros) and zeros.max() > ones.min():
                return False
            if len(frac):
                f = frac[0]
                if (len(zeros) and zeros.max() > f) or (len(ones) and ones.min() < f):
                    return False
        return True


def build_decoupled_lp(spec: SensorSpec, C: float, X: int) -> LinearProgram:
    """Variables are (mu[1..X], y[1..X-1, 1..Q]) flattened in that order.

    Equalities: tail-aware normalization, the age-1 reset balance and the
    forward chain; one inequality caps average power at the budget; the
    box rows keep y under mu*eta.
    """
    model = spec.channel
    if X < 2:
        raise ValueError("truncation age must be >= 2")
    Q = model.Q
    g = gamma(model)
    n_mu, n_y = X, (X - 1) * Q
    n = n_mu + n_y
    yidx = lambda x, q: n_mu + (x - 1) * Q + (q - 1)  # noqa: E731

    c = np.zeros(n)
    c[:X - 1] = np.arange(1, X)
    c[X - 1] = X / (1 - g) + g / (1 - g) ** 2 + C / (1 - g)
    c[n_mu:] = C

    A_eq = np.zeros((1 + 1 + (X - 1), n))
    b_eq = np.zeros(1 + 1 + (X - 1))
    # normalization with geometric tail
    A_eq[0, :X - 1] = 1.0
    A_eq[0, X - 1] = 1.0 / (1 - g)
    b_eq[0] = 1.0
    # reset balance into age 1
    A_eq[1, 0] = 1.0
    A_eq[1, X - 1] = -1.0
    for x in range(1, X):
        for q in range(1, Q + 1):
            A_eq[1, yidx(x, q)] = -(1.0 - model.eps[q - 1])
    # forward chain mu_x = mu_{x-1} - sum_q y_{x-1,q}(1-eps_q), x = 2..X
    for x in range(2, X + 1):
        r = x  # row 2..X
        A_eq[r, x - 1] = 1.0
        A_eq[r, x - 2] = -1.0
        for q in range(1, Q + 1):
            A_eq[r, yidx(x - 1, q)] = 1.0 - model.eps[q - 1]

    # power row + coupling rows y_{x,q} <= mu_x eta_q
    A_ub = np.zeros((1 + n_y, n))
    b_ub = np.zeros(1 + n_y)
    for x in range(1, X):
        for q in range(1, Q + 1):
            A_ub[0, yidx(x, q)] = model.omega[q - 1]
    A_ub[0, X - 1] = model.mean_power / (1 - g)
    b_ub[0] = spec.power_budget
    r = 1
    for x in range(1, X):
        for q in range(1, Q + 1):
            A_ub[r, yidx(x, q)] = 1.0
            A_ub[r, x - 1] = -model.eta[q - 1]
            r += 1

    hi = np.concatenate([np.ones(n_mu), np.full(n_y, np.inf)])
    return LinearProgram(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, hi=hi)


def min_tail_power(spec: SensorSpec, X: int, backend: str = "highs") -> float:
    """Smallest average power any truncated stationary policy must spend,
    given the mandatory always-schedule tail beyond X."""
    lp = build_decoupled_lp(spec, 0.0, X)
    probe = LinearProgram(c=lp.A_ub[0].copy(), A_eq=lp.A_eq, b_eq=lp.b_eq,
                          A_ub=lp.A_ub[1:], b_ub=lp.b_ub[1:], hi=lp.hi)
    sol = solve_lp(probe, backend=backend)
    return sol.objective


def solve_decoupled(spec: SensorSpec, C: float, X: int = None,
                    backend: str = "highs") -> OccupancyMeasure:
    """Optimal occupancy for average (age + C * schedule) cost under the
    power budget."""
    if X is None:
        X = auto_truncation(spec)
    lp = build_decoupled_lp(spec, C, X)
    sol = solve_lp(lp, backend=backend)
    if sol.status == "infeasible":
        need = min_tail_power(spec, X, backend=backend)
        raise InfeasiblePower(
            f"power budget {spec.power_budget} below minimum achievable "
            f"{need:.6g} at truncation X={X}; raise X or the budget",
            min_power=need,
        )
    if sol.status != "optimal":
        raise RuntimeError(f"decoupled LP ended with status {sol.status}")
    Q = spec.channel.Q
    mu = sol.v[:X].copy()
    y = sol.v[X:].reshape(X - 1, Q).copy()
    # scrub solver-tolerance negatives
    np.clip(mu, 0.0, None, out=mu)
    np.clip(y, 0.0, None, out=y)
    occ = OccupancyMeasure(X=X, mu=mu, y=y)
    occ.objective = sol.objective
    return occ


def occupancy_stats(occ: OccupancyMeasure, model: ChannelModel) -> dict:
    """Average age, average power and scheduled-slot fraction implied by
    an occupancy measure (tail included analytically)."""
    g = gamma(model)
    mu, y, X = occ.mu, occ.y, occ.X
    tail = mu[-1] / (1.0 - g)
    avg_aoi = float(np.arange(1, X) @ mu[:-1]) + X * tail + g * mu[-1] / (1.0 - g) ** 2
    avg_power = float((y @ model.omega).sum()) + tail * model.mean_power
    sched = float(y.sum()) + tail
    return {"avg_aoi": avg_aoi, "avg_power": avg_power, "sched_fraction": sched}


def steady_state_distribution(policy: ThresholdPolicy, model: ChannelModel) -> np.ndarray:
    """Stationary age distribution mu[1..X] of the chain induced by a
    stationary randomized policy; states beyond X always schedule.

    Solved through the forward recursion mu_{x+1} = alpha_x mu_x and the
    tail-aware normalization (equivalent to the stationarity system)."""
    X = policy.X
    g = gamma(model)
    alphas = np.empty(X - 1)
    for x in range(1, X):
        a, _ = transfer_probs(policy.p[x - 1], model)
        alphas[x - 1] = a
    prod = np.concatenate([[1.0], np.cumprod(alphas)])  # mu_x / mu_1
    denom = prod[:-1].sum() + prod[-1] / (1.0 - g)
    if not np.isfinite(denom) or denom <= 0:
        raise SingularSystem("stationary distribution is not normalizable")
    return prod / denom


def occupancy_from_policy(policy: ThresholdPolicy, model: ChannelModel) -> OccupancyMeasure:
    """Exact occupancy measure (mu, y) induced by a policy."""
    mu = steady_state_distribution(policy, model)
    y = mu[:-1, None] * model.eta[None, :] * policy.p[:-1]
    return OccupancyMeasure(X=policy.X, mu=mu, y=y)


def recover_policy(occ: OccupancyMeasure, model: ChannelModel,
                   mass_floor: float = MASS_FLOOR) -> ThresholdPolicy:
    """Scheduling probabilities p = y / (mu * eta); ages whose stationary
    mass is numerically negligible inherit the pattern of the nearest
    well-massed age (they are cost-neutral)."""
    X, Q = occ.X, model.Q
    p = np.ones((X, Q))
    massed = occ.mu[:-1] > mass_floor
    for x in range(X - 1):
        if not massed[x]:
            continue
        for q in range(Q):
            denom = occ.mu[x] * model.eta[q]
            if denom <= 0:
                p[x, q] = 1.0
                continue
            val = occ.y[x, q] / denom
            # the relative tolerance only means something when the state
            # carries real mass; below that the ratio is solver noise on
            # a cost-neutral state
            if denom > 1e-6 and (val < -CLAMP_TOL or val > 1.0 + CLAMP_TOL):
                raise PolicyRecoveryError(
                    f"p[{x + 1},{q + 1}] = {val} outside [0,1] beyond tolerance")
            p[x, q] = min(max(val, 0.0), 1.0)
    # low-mass ages copy the nearest well-massed age (ties go upward,
    # where the always-schedule tail lives)
    idx = np.flatnonzero(massed)
    for x in range(X - 1):
        if massed[x] or len(idx) == 0:
            continue
        near = idx[np.argmin(np.abs(idx - x) - 1e-9 * np.sign(idx - x))]
        p[x] = p[near]
    return ThresholdPolicy(X=X, p=p)


def oracle_best_threshold_policy(spec: SensorSpec, C: float, X: int,
                                 mix_grid: float = 1e-3) -> dict:
    """Brute-force reference for small instances: enumerate every
    deterministic threshold vector (one threshold per estimate), evaluate
    each exactly through its stationary chain, then scan occupancy
    mixtures of every pair on a weight grid. One linear budget constraint
    admits at most one randomized state, so the grid resolution bounds
    the gap to the LP optimum."""
    model = spec.channel
    Q = model.Q
    pols = []
    for thresholds in product(range(1, X + 2), repeat=Q):
        p = np.zeros((X, Q))
        for q in range(Q):
            p[thresholds[q] - 1:, q] = 1.0
        pol = ThresholdPolicy(X=X, p=p)
        occ = occupancy_from_policy(pol, model)
        st = occupancy_stats(occ, model)
        cost = st["avg_aoi"] + C * st["sched_fraction"]
        pols.append((thresholds, cost, st["avg_power"]))

    best = None
    E = spec.power_budget
    for t, cost, power in pols:
        if power <= E + 1e-12 and (best is None or cost < best["cost"]):
            best = {"cost": cost, "thresholds": t, "mix": None}
    lams = np.arange(0.0, 1.0 + mix_grid / 2, mix_grid)
    for (t1, c1, p1), (t2, c2, p2) in combinations(pols, 2):
        pw = lams * p1 + (1 - lams) * p2
        cs = lams * c1 + (1 - lams) * c2
        ok = pw <= E + 1e-12
        if not np.any(ok):
            continue
        i = int(np.argmin(np.where(ok, cs, np.inf)))
        if best is None or cs[i] < best["cost"]:
            best = {"cost": float(cs[i]), "thresholds": (t1, t2),
                    "mix": float(lams[i])}
    if best is None:
        raise InfeasiblePower("no threshold policy meets the power budget",
                              min_power=min(p for _, _, p in pols))
    return best


# --- export helpers ---

def occupancy_to_rows(occ: OccupancyMeasure, model: ChannelModel,
                      policy: ThresholdPolicy = None):
    """Rows (x, q, mu, y, p) for CSV/JSON export."""
    if policy is None:
        policy = recover_policy(occ, model)
    rows = []
    for x in range(1, occ.X + 1):
        for q in range(1, model.Q + 1):
            y = float(occ.y[x - 1, q - 1]) if x < occ.X else float("nan")
            rows.append({"x": x, "q": q, "mu": float(occ.mu[x - 1]),
                         "y": y, "p": policy.prob(x, q)})
    return rows


def export_occupancy_csv(path, occ, model, policy=None):
    rows = occupancy_to_rows(occ, model, policy)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["x", "q", "mu", "y", "p"])
        w.writeheader()
        w.writerows(rows)


def export_occupancy_json(path, occ, model, policy=None):
    with open(path, "w") as f:
        json.dump(occupancy_to_rows(occ, model, policy), f, indent=2)
