"""Channel/network domain types: validation, kernels, serialization."""

import json

import numpy as np
import pytest

from aoi_sched.errors import (
    DegenerateGammaOne,
    LossOutOfRange,
    PowersNotAscending,
    ProbabilityNotNormalized,
)
from aoi_sched.model import (
    ChannelModel,
    NetworkSpec,
    SensorSpec,
    gamma,
    load_network,
    network_from_dict,
    network_to_dict,
    sample_channel_state,
    save_network,
    step_aoi,
    transfer_probs,
)


def make_model(eta=(0.25, 0.25, 0.25, 0.25), eps=(0.1, 0.2, 0.3, 0.4),
               omega=(1.0, 2.0, 3.0, 4.0)):
    return ChannelModel(eta=eta, eps=eps, omega=omega)


def test_validation_rejects_bad_inputs():
    with pytest.raises(ProbabilityNotNormalized):
        ChannelModel(eta=[0.5, 0.6], eps=[0, 0], omega=[1, 2])
    with pytest.raises(ProbabilityNotNormalized):
        ChannelModel(eta=[0.5, 0.5], eps=[0, 0], omega=[1])
    with pytest.raises(LossOutOfRange):
        ChannelModel(eta=[0.5, 0.5], eps=[0.2, 1.2], omega=[1, 2])
    with pytest.raises(LossOutOfRange):
        ChannelModel(eta=[0.5, 0.5], eps=[-0.1, 0.5], omega=[1, 2])
    with pytest.raises(PowersNotAscending):
        ChannelModel(eta=[0.5, 0.5], eps=[0, 0], omega=[2, 2])
    with pytest.raises(DegenerateGammaOne):
        ChannelModel(eta=[1.0], eps=[1.0], omega=[1.0])
    # eta summing to 1 within 1e-12 is accepted
    ChannelModel(eta=[1 / 3, 1 / 3, 1 / 3], eps=[0, 0, 0], omega=[1, 2, 3])


def test_sensor_and_network_validation():
    m = make_model()
    with pytest.raises(ValueError):
        SensorSpec(channel=m, power_budget=0.0)
    s = SensorSpec(channel=m, power_budget=1.0)
    with pytest.raises(ValueError):
        NetworkSpec(sensors=[s, s], bandwidth=3)
    with pytest.raises(ValueError):
        NetworkSpec(sensors=[s], bandwidth=0)
    net = NetworkSpec(sensors=[s, s, s], bandwidth=2)
    assert net.N == 3


def test_gamma_dot_product():
    # sum(eta * eps) for the sweep channel
    m = ChannelModel(eta=[0.135, 0.239, 0.232, 0.394],
                     eps=[0.1, 0.2, 0.3, 0.4], omega=[1, 2, 3, 4])
    assert abs(gamma(m) - 0.2885) < 1e-12
    assert abs(m.mean_power - 2.885) < 1e-12
    m0 = make_model(eps=(0, 0, 0, 0))
    assert gamma(m0) == 0.0


def test_step_aoi_cases():
    assert step_aoi(5, True, True) == 1
    assert step_aoi(5, True, False) == 6
    assert step_aoi(5, False) == 6
    assert step_aoi(1, True, True) == 1


def test_transfer_probs_sum_to_one():
    m = make_model()
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.random(4)
        a, b = transfer_probs(p, m)
        assert abs(a + b - 1.0) < 1e-12
        assert 0.0 <= a <= 1.0
    # never schedule -> age always grows
    a, b = transfer_probs(np.zeros(4), m)
    assert a == 1.0 and b == 0.0
    # always schedule -> alpha = gamma
    a, b = transfer_probs(np.ones(4), m)
    assert abs(a - gamma(m)) < 1e-15
    # beyond the truncation the policy row is ignored
    a, b = transfer_probs(np.zeros(4), m, at_or_beyond_X=True)
    assert abs(a - gamma(m)) < 1e-15


def test_channel_sampling_matches_eta():
    m = ChannelModel(eta=[0.135, 0.239, 0.232, 0.394],
                     eps=[0.1, 0.2, 0.3, 0.4], omega=[1, 2, 3, 4])
    rng = np.random.default_rng(42)
    n = 200_000
    counts = np.zeros(4)
    for _ in range(n):
        counts[sample_channel_state(m, rng) - 1] += 1
    freq = counts / n
    assert np.all(np.abs(freq - m.eta) < 0.005)


def test_channel_sampling_deterministic():
    m = make_model()
    a = [sample_channel_state(m, np.random.default_rng(7)) for _ in range(10)]
    b = [sample_channel_state(m, np.random.default_rng(7)) for _ in range(10)]
    # one draw each from fresh generators is the same value; a run from a
    # single generator replays identically
    rng1, rng2 = np.random.default_rng(3), np.random.default_rng(3)
    run1 = [sample_channel_state(m, rng1) for _ in range(100)]
    run2 = [sample_channel_state(m, rng2) for _ in range(100)]
    assert run1 == run2
    assert a == b


def test_network_json_round_trip(tmp_path):
    m1 = make_model()
    m2 = ChannelModel(eta=[0.5, 0.5], eps=[0.0, 0.3], omega=[1.0, 5.0])
    net = NetworkSpec(sensors=[SensorSpec(channel=m1, power_budget=1.5),
                               SensorSpec(channel=m2, power_budget=0.7)],
                      bandwidth=1)
    doc = network_to_dict(net)
    assert doc["M"] == 1
    assert doc["sensors"][1]["omega"] == [1.0, 5.0]
    back = network_from_dict(json.loads(json.dumps(doc)))
    assert back.N == 2
    assert back.bandwidth == 1
    assert np.allclose(back.sensors[0].channel.eta, m1.eta)
    assert back.sensors[1].power_budget == 0.7

    p = tmp_path / "net.json"
    save_network(net, p)
    again = load_network(p)
    assert network_to_dict(again) == doc


def test_arrays_are_read_only():
    m = make_model()
    with pytest.raises(ValueError):
        m.eta[0] = 0.9
