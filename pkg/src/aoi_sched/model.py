"""Domain types for channels, sensors and networks, plus the exact
per-slot stochastic kernels shared by the optimizer and the simulator.

Channel estimates q are 1-based everywhere on the public surface;
internal arrays are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGammaOne,
    LossOutOfRange,
    PowersNotAscending,
    ProbabilityNotNormalized,
)

ETA_SUM_TOL = 1e-12
GAMMA_TOL = 1e-9


def _ro(a):
    """Read-only float array copy."""
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChannelModel:
    """Per-slot channel statistics of one sensor.

    eta[q-1]   probability the estimated state is q
    eps[q-1]   packet-loss probability given estimate q
    omega[q-1] transmit power cost given estimate q (strictly ascending)
    """

    eta: np.ndarray
    eps: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", _ro(self.eta))
        object.__setattr__(self, "eps", _ro(self.eps))
        object.__setattr__(self, "omega", _ro(self.omega))
        validate_channel_model(self)

    @property
    def Q(self):
        return len(self.eta)

    @property
    def eta_cum(self):
        return np.cumsum(self.eta)

    @property
    def mean_power(self):
        """Average power of an always-scheduled slot, sum_q eta_q * omega_q."""
        return float(self.eta @ self.omega)


def validate_channel_model(model: ChannelModel):
    """Raise if any ChannelModel invariant is violated."""
    eta, eps, omega = model.eta, model.eps, model.omega
    if not (len(eta) == len(eps) == len(omega)) or len(eta) == 0:
        raise ProbabilityNotNormalized("eta/eps/omega must share a nonzero length")
    if np.any(eta < 0) or abs(eta.sum() - 1.0) > ETA_SUM_TOL:
        raise ProbabilityNotNormalized(f"sum(eta) = {eta.sum()!r}, expected 1")
    if np.any(eps < 0) or np.any(eps > 1):
        raise LossOutOfRange(f"eps outside [0,1]: {eps}")
    if np.any(np.diff(omega) <= 0):
        raise PowersNotAscending(f"omega must be strictly ascending: {omega}")
    g = float(eta @ eps)
    if g >= 1.0 - GAMMA_TOL:
        raise DegenerateGammaOne(
            f"gamma = sum(eta*eps) = {g} >= 1 - {GAMMA_TOL}; no packet is ever delivered"
        )


def gamma(model: ChannelModel) -> float:
    """Unconditional per-slot failure probability under always-schedule."""
    return float(model.eta @ model.eps)


@dataclass(frozen=True)
class SensorSpec:
    channel: ChannelModel
    power_budget: float  # average energy per slot

    def __post_init__(self):
        if not self.power_budget > 0:
            raise ValueError(f"power_budget must be > 0, got {self.power_budget}")


@dataclass(frozen=True)
class NetworkSpec:
    sensors: tuple  # of SensorSpec
    bandwidth: int  # M, max simultaneous uploads

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        n = len(self.sensors)
        if not (1 <= self.bandwidth <= n):
            raise ValueError(f"need 1 <= M <= N, got M={self.bandwidth}, N={n}")

    @property
    def N(self):
        return len(self.sensors)


@dataclass(frozen=True)
class AoiState:
    x: int  # age in slots, >= 1
    q: int  # channel estimate, 1..Q

    def __post_init__(self):
        if self.x < 1:
            raise ValueError("age must be >= 1")
        if self.q < 1:
            raise ValueError("estimate index must be >= 1")


def sample_channel_state(model: ChannelModel, rng: np.random.Generator) -> int:
    """Draw a 1-based channel estimate with probabilities eta."""
    u = rng.random()
    return int(np.searchsorted(model.eta_cum, u, side="right")) + 1


def step_aoi(x: int, scheduled: bool, success: bool = False) -> int:
    """One-slot age update: reset to 1 on a delivered packet, else grow."""
    if scheduled and success:
        return 1
    return x + 1


def transfer_probs(policy_row, model: ChannelModel, at_or_beyond_X: bool = False):
    """Forward/backward age transition probabilities (alpha, beta) of one
    age row under scheduling probabilities p[q].

    alpha: age grows by one; beta: age resets to 1. alpha + beta = 1.
    At or beyond the truncation age the policy always schedules, so
    alpha = gamma and beta = 1 - gamma.
    """
    g = gamma(model)
    if at_or_beyond_X:
        return g, 1.0 - g
    p = np.asarray(policy_row, dtype=float)
    alpha = float(model.eta @ (p * model.eps + 1.0 - p))
    beta = float(model.eta @ (p * (1.0 - model.eps)))
    return alpha, beta


# --- JSON network schema ---
# {"M": int, "sensors": [{"eta": [...], "eps": [...], "omega": [...],
#                         "power_budget": float}]}

def network_to_dict(network: NetworkSpec) -> dict:
    return {
        "M": network.bandwidth,
        "sensors": [
            {
                "eta": s.channel.eta.tolist(),
                "eps": s.channel.eps.tolist(),
                "omega": s.channel.omega.tolist(),
                "power_budget": s.power_budget,
            }
            for s in network.sensors
        ],
    }


def network_from_dict(doc: dict) -> NetworkSpec:
    sensors = [
        SensorSpec(
            channel=ChannelModel(eta=s["eta"], eps=s["eps"], omega=s["omega"]),
            power_budget=float(s["power_budget"]),
        )
        for s in doc["sensors"]
    ]
    return NetworkSpec(sensors=sensors, bandwidth=int(doc["M"]))


def load_network(path) -> NetworkSpec:
    with open(path) as f:
        return network_from_dict(json.load(f))


def save_network(network: NetworkSpec, path):
    with open(path, "w") as f:
        json.dump(network_to_dict(network), f, indent=2)
