import math

import numpy as np
import pytest
from scipy import stats

from smoney.bb84 import (
    Basis,
    ChannelModel,
    PulseDescription,
    QubitState,
    measure_bb84,
    measure_projective,
    prepare_pulses,
    projective_probabilities,
    statevector,
    transmit,
)
from smoney.errors import InvalidInputError

ALL_PULSES = [PulseDescription((1, 1), r, Basis(s)) for s in (0, 1) for r in (0, 1)]


def test_prepare_single():
    assert prepare_pulses("0", "0", 1, 1) == [PulseDescription((1, 1), 0, Basis.COMPUTATIONAL)]


def test_prepare_plus_minus():
    ps = prepare_pulses("01", "11", 2, 1)
    assert [statevector(p) for p in ps] == [
        QubitState(1 / math.sqrt(2), 1 / math.sqrt(2)),
        QubitState(1 / math.sqrt(2), -1 / math.sqrt(2)),
    ]


def test_prepare_enumeration_k_major():
    ps = prepare_pulses("0110", "0011", 2, 2)
    assert [p.label for p in ps] == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert [(p.r, int(p.s)) for p in ps] == [(0, 0), (1, 0), (1, 1), (0, 1)]


def test_prepare_length_mismatch():
    with pytest.raises(InvalidInputError):
        prepare_pulses("01", "0", 2, 1)


def test_statevector_table():
    vs = {(p.r, int(p.s)): statevector(p) for p in ALL_PULSES}
    h = 1 / math.sqrt(2)
    assert vs[(0, 0)] == QubitState(1, 0)
    assert vs[(1, 0)] == QubitState(0, 1)
    assert vs[(0, 1)] == QubitState(h, h)
    assert vs[(1, 1)] == QubitState(h, -h)
    for v in vs.values():
        assert abs(v.a0) ** 2 + abs(v.a1) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_unnormalized_state_rejected():
    with pytest.raises(InvalidInputError):
        QubitState(1, 1)


def test_channel_ranges():
    with pytest.raises(InvalidInputError):
        ChannelModel(p_loss=1.0)
    with pytest.raises(InvalidInputError):
        ChannelModel(p_err=0.5)


def test_transmit(rng):
    ps = prepare_pulses("0" * 10, "0" * 10, 10, 1)
    assert transmit(ps, ChannelModel(), rng) == {p.label for p in ps}
    assert transmit(ps, ChannelModel(p_loss=1 - 1e-12), rng) == set()
    many = prepare_pulses("0" * 10**4, "0" * 10**4, 10**4, 1)
    frac = len(transmit(many, ChannelModel(p_loss=0.5), rng)) / 10**4
    assert abs(frac - 0.5) <= 0.02


def test_noiseless_round_trip(rng):
    for p in ALL_PULSES:
        for _ in range(20):
            assert measure_bb84(p, p.s, ChannelModel(), rng) == p.r


def test_wrong_basis_uniform(rng):
    p = PulseDescription((1, 1), 0, Basis.COMPUTATIONAL)
    ones = sum(measure_bb84(p, Basis.HADAMARD, ChannelModel(), rng) for _ in range(10**4))
    assert stats.chisquare([ones, 10**4 - ones]).pvalue > 0.001


def test_flip_model(rng):
    minus = PulseDescription((1, 1), 1, Basis.HADAMARD)
    ones = sum(measure_bb84(minus, Basis.HADAMARD, ChannelModel(p_err=0.1), rng) for _ in range(10**4))
    assert abs(ones / 10**4 - 0.9) < 4 * math.sqrt(0.09 / 10**4)


def test_projective_eigenstate(rng):
    zero = QubitState(1, 0)
    assert all(measure_projective(zero, 0.0, rng) == 0 for _ in range(100))


def test_projective_breidbart_probability():
    # independent evaluation: |<e0|0>|^2 with e0 = (cos t, sin t)
    t = math.pi / 8
    expected = abs(np.dot(np.array([math.cos(t), math.sin(t)]), np.array([1.0, 0.0]))) ** 2
    p0, p1 = projective_probabilities(QubitState(1, 0), t)
    assert p0 == pytest.approx(expected, abs=1e-12)
    assert p0 == pytest.approx(0.8536, abs=1e-4)


def test_projective_normalization():
    for p in ALL_PULSES:
        for t in np.linspace(0, math.pi, 17, endpoint=False):
            assert sum(projective_probabilities(statevector(p), t)) == pytest.approx(1.0, abs=1e-12)


def test_projective_rejects_angle(rng):
    with pytest.raises(InvalidInputError):
        measure_projective(QubitState(1, 0), math.pi, rng)


@pytest.mark.parametrize("theta, basis", [(0.0, Basis.COMPUTATIONAL), (math.pi / 4, Basis.HADAMARD)])
def test_projective_matches_bb84(rng, theta, basis):
    trials = 10**4
    for p in ALL_PULSES:
        a = sum(measure_projective(statevector(p), theta, rng) for _ in range(trials)) / trials
        b = sum(measure_bb84(p, basis, ChannelModel(), rng) for _ in range(trials)) / trials
        # compare both to the exact rate; each within 3 sigma
        exact = float(p.r) if int(p.s) == int(basis) else 0.5
        sigma = math.sqrt(max(exact * (1 - exact), 1e-12) / trials)
        assert abs(a - exact) <= 3 * sigma + 1e-12
        assert abs(b - exact) <= 3 * sigma + 1e-12
