import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinmac.accounting import crossbar_power_cycle
from spinmac.readout import (
    ReadoutCircuit,
    ReadoutWarning,
    decode_element,
    decode_sensed,
    nonvolatility_check,
    sense_current,
)
from spinmac.synapse import DwSynapseState, ab_constants, reset, synapse_conductance


@pytest.fixture
def state():
    return DwSynapseState()


@pytest.fixture
def circuit(state):
    return ReadoutCircuit.for_synapse(state)


def bridge(g, a, g0, vs):
    """Two voltage dividers sharing G_0: series conductance of each branch."""
    series = lambda x, y: x * y / (x + y)
    return vs * (series(a, g0) - series(g, g0))


def test_circuit_validation():
    with pytest.raises(ValueError):
        ReadoutCircuit(0.1, 1e-3, 0.0)
    with pytest.raises(ValueError):
        ReadoutCircuit(0.0, 1e-3, 0.1)


def test_balanced_bridge(state, circuit):
    a, _ = ab_constants(state)
    assert sense_current(a, circuit) == pytest.approx(0.0, abs=1e-20)


def test_matches_series_oracle(circuit):
    for g in (5e-4, 7e-4, 9.9e-4):
        assert sense_current(g, circuit) == pytest.approx(
            bridge(g, circuit.a_ref, circuit.g0, circuit.v_s), rel=1e-10)


def test_large_sense_conductor_limit(state):
    a, _ = ab_constants(state)
    c = ReadoutCircuit(0.01, a, 1e6 * a)
    g = 6e-4
    assert sense_current(g, c) == pytest.approx(0.01 * (a - g), rel=1e-5)


def test_finite_ratio_within_two_percent(state, circuit):
    a, _ = ab_constants(state)
    for x in np.linspace(1e-9, state.x_max, 7):
        g = synapse_conductance(state, x)
        assert abs(sense_current(g, circuit) / (circuit.v_s * (a - g)) - 1) < 0.02


def test_sense_current_bounded(state, circuit):
    g = synapse_conductance(state, state.x_max)
    assert abs(sense_current(g, circuit)) < 1e-6


def test_low_ratio_warns(state):
    a, _ = ab_constants(state)
    c = ReadoutCircuit(0.01, a, 10 * a)
    with pytest.warns(ReadoutWarning):
        sense_current(6e-4, c)


@settings(max_examples=100, deadline=None)
@given(st.floats(5e-4, 1e-3), st.floats(5e-4, 1e-3))
def test_sense_current_decreasing(g1, g2):
    c = ReadoutCircuit.for_synapse(DwSynapseState())
    if g2 - g1 > 1e-12:
        assert sense_current(g1, c) > sense_current(g2, c)


def test_decode_identity(state, circuit):
    a, b = ab_constants(state)
    assert decode_element(a, (a, b), circuit) == 0.0
    x = 7.3e-7
    assert decode_element(a - b * x, (a, b), circuit) == pytest.approx(x, rel=1e-9)
    with pytest.raises(ValueError):
        decode_element(a, (a, 0.0), circuit)


def test_sense_and_direct_paths_agree(state, circuit):
    ab = ab_constants(state)
    for x in np.linspace(10e-9, state.x_max, 9):
        g = synapse_conductance(state, x)
        direct = decode_element(g, ab, circuit)
        sensed = decode_sensed(sense_current(g, circuit), ab, circuit)
        assert abs(sensed / direct - 1) < 0.02


def test_saturated_decode_is_full_scale(state, circuit):
    ab = ab_constants(state)
    g = synapse_conductance(state, state.x_max)
    assert decode_element(g, ab, circuit) == pytest.approx(state.x_max, rel=1e-9)


def test_nonvolatility(state, circuit):
    state.x = 812e-9
    r = nonvolatility_check(state, circuit)
    assert r["before"] == r["after"] and r["recoverable"]
    reset(state)
    assert nonvolatility_check(state, circuit)["after"] == pytest.approx(0.0, abs=1e-12)


def test_crossbar_loses_product():
    g = np.array([[1e-4, 2e-4], [3e-4, 4e-4]])
    r = crossbar_power_cycle(g, np.array([0.01, 0.02]))
    assert not r["recoverable"]
    assert np.all(r["after"] == 0)
