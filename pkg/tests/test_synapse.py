import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinmac.synapse import (
    J_CAL,
    CalibrationTable,
    DwMobilityModel,
    DwSynapseState,
    HeavyMetalStrip,
    MobilityMode,
    PulseTiming,
    ab_constants,
    apply_pulse,
    reset,
    strip_resistance,
    synapse_conductance,
)

STRIP = HeavyMetalStrip()
TIMING = PulseTiming()
LINEAR = DwMobilityModel()


def test_strip_resistance_per_pulse_length():
    for n_max in (1, 17, 1000):
        s = HeavyMetalStrip.for_n_max(n_max)
        assert strip_resistance(s) == pytest.approx(48.0 * n_max, rel=1e-12)
    assert STRIP.resistance == pytest.approx(816.0, rel=1e-12)
    thick = HeavyMetalStrip(thickness=10e-9)
    assert thick.resistance == pytest.approx(STRIP.resistance / 2, rel=1e-12)


def test_strip_validation():
    with pytest.raises(ValueError):
        HeavyMetalStrip(width=0)
    with pytest.raises(ValueError):
        PulseTiming(pulse_width=0)


def test_calibration_point():
    j = STRIP.current_density(50e-6)
    assert j == pytest.approx(J_CAL, rel=1e-12)
    mean, std = LINEAR.mean_std(j, TIMING.pulse_width)
    assert mean == pytest.approx(120e-9, rel=1e-12)
    assert std == pytest.approx(0.2 * 120e-9, rel=1e-12)


def test_low_current_linear_vs_table():
    j = 1.6e10
    lin, _ = LINEAR.mean_std(j, 0.5e-9)
    assert lin == pytest.approx(9.6e-9, rel=1e-12)
    table = DwMobilityModel(mode="table")
    tab, _ = table.mean_std(j, 0.5e-9)
    assert tab == pytest.approx(5e-9, rel=1e-9)
    assert table.mean_std(J_CAL, 0.5e-9)[0] == pytest.approx(120e-9, rel=1e-9)


def test_mobility_validation():
    with pytest.raises(ValueError):
        DwMobilityModel(eta=0)
    with pytest.raises(ValueError):
        DwMobilityModel(noise_std_rel=-0.1)


def test_table_rejects_non_monotone(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1e10, 1e-9, 1e-10\n5e9, 2e-9, 1e-10\n")
    with pytest.raises(ValueError, match="strictly increasing"):
        CalibrationTable.load(p)
    p.write_text("1e10, 1e-9\n")
    with pytest.raises(ValueError, match="line 1"):
        CalibrationTable.load(p)


def test_table_interpolation():
    t = CalibrationTable(np.array([1.0, 2.0, 4.0]), np.array([10.0, 20.0, 30.0]),
                         np.array([1.0, 2.0, 4.0]))
    assert t.lookup(0.5) == pytest.approx((5.0, 0.5))
    assert t.lookup(3.0) == pytest.approx((25.0, 3.0))
    assert t.lookup(6.0)[0] == pytest.approx(40.0)


def test_zero_pulse_is_noop():
    s = DwSynapseState(x=100e-9)
    apply_pulse(s, 0.0, STRIP, LINEAR, TIMING)
    assert s.x == 100e-9


def test_negative_current_rejected():
    with pytest.raises(ValueError):
        apply_pulse(DwSynapseState(), -1e-6, STRIP, LINEAR, TIMING)


def test_saturation_flagged_and_clamped():
    s = DwSynapseState()
    for _ in range(20):
        apply_pulse(s, 50e-6, STRIP, LINEAR, TIMING, noise=False)
    assert s.saturated
    assert s.x == pytest.approx(s.x_max)


def test_full_row_at_max_fits():
    s = DwSynapseState()
    for _ in range(17):
        apply_pulse(s, 50e-6, STRIP, LINEAR, TIMING, noise=False)
    assert not s.saturated
    assert s.x == pytest.approx(17 * 120e-9, rel=1e-12)


def _three_conductors(s, x):
    L, w = s.layer_length, s.wall_width
    # conductance of each segment is proportional to its area share
    return s.g_ap * (x / L) + s.g_dw * (w / L) + s.g_p * ((L - x - w) / L)


def test_conductance_end_points():
    s = DwSynapseState()
    a, b = ab_constants(s)
    assert synapse_conductance(s, 0.0) == pytest.approx(a, rel=1e-14)
    w = s.wall_width / s.layer_length
    assert synapse_conductance(s, s.x_max) == pytest.approx(s.g_ap * (1 - w) + s.g_dw * w, rel=1e-14)
    mid = synapse_conductance(s, s.x_max / 2)
    assert mid == pytest.approx((synapse_conductance(s, 0) + synapse_conductance(s, s.x_max)) / 2,
                                rel=1e-14)


def test_ab_from_two_samples():
    s = DwSynapseState()
    x1, x2 = 300e-9, 1500e-9
    g1, g2 = _three_conductors(s, x1), _three_conductors(s, x2)
    b = (g1 - g2) / (x2 - x1)
    a = g1 + b * x1
    assert ab_constants(s) == pytest.approx((a, b), rel=1e-10)


def test_ab_limits():
    s = DwSynapseState(wall_width=1e-15)
    assert ab_constants(s)[0] == pytest.approx(s.g_p, rel=1e-9)


def test_state_validation():
    with pytest.raises(ValueError):
        DwSynapseState(g_p=1e-3, g_ap=1e-3)
    with pytest.raises(ValueError):
        DwSynapseState(x=-1e-9)
    with pytest.raises(ValueError):
        DwSynapseState(wall_width=3000e-9)


def test_reset():
    s = DwSynapseState(x=5e-7, saturated=True)
    reset(s)
    assert s.x == 0 and not s.saturated
    assert synapse_conductance(s) == pytest.approx(ab_constants(s)[0], rel=1e-14)
    reset(s)
    assert s.x == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 2040e-9), min_size=3, max_size=3, unique=True))
def test_conductance_affine(xs):
    st_ = DwSynapseState()
    g = [synapse_conductance(st_, x) for x in xs]
    (x1, x2, x3), (g1, g2, g3) = xs, g
    # collinearity via the cross product of the two secant vectors
    cross = (x2 - x1) * (g3 - g1) - (x3 - x1) * (g2 - g1)
    assert abs(cross) <= 1e-12 * max(abs(x2 - x1), abs(x3 - x1)) * abs(g1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 30e-6), min_size=1, max_size=12))
def test_accumulator_sums_currents(currents):
    s = DwSynapseState()
    for i in currents:
        apply_pulse(s, i, STRIP, LINEAR, TIMING, noise=False)
    expect = LINEAR.eta / STRIP.cross_section * sum(currents)
    assert s.x == pytest.approx(expect, rel=1e-12, abs=1e-24)
    assert 0 <= s.x <= s.x_max


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2040e-9), st.floats(0, 2040e-9))
def test_conductance_decreasing(x1, x2):
    s = DwSynapseState()
    if x2 - x1 > 1e-12:
        assert synapse_conductance(s, x1) > synapse_conductance(s, x2)


def test_noisy_mean_converges():
    train = [20e-6, 35e-6, 10e-6, 45e-6]
    base = DwSynapseState()
    for i in train:
        apply_pulse(base, i, STRIP, LINEAR, TIMING, noise=False)
    rng = np.random.default_rng(7)
    xs = []
    for _ in range(1000):
        s = DwSynapseState(rng=rng)
        for i in train:
            apply_pulse(s, i, STRIP, LINEAR, TIMING)
        xs.append(s.x)
    xs = np.array(xs)
    assert abs(xs.mean() - base.x) < 3 * xs.std() / np.sqrt(len(xs))


def test_table_mode_enum():
    assert DwMobilityModel(mode="table").mode is MobilityMode.TABLE
