import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinmac.accounting import (
    AJ,
    EXCLUDED_TERMS,
    CostModel,
    actual_run_energy,
    cost_for_n_max,
    crossbar_compare,
    energy_per_mac,
    latency,
    write_sweep_csv,
)


def test_energy_per_mac_reference():
    for n_max in (1, 17, 1000):
        e = energy_per_mac(50e-6, 48.0 * n_max, 0.5e-9)
        assert e == pytest.approx(60 * n_max * AJ, rel=1e-12)
    assert energy_per_mac(0.0, 816, 0.5e-9) == 0.0
    with pytest.raises(ValueError):
        energy_per_mac(-1e-6, 816, 0.5e-9)


def test_full_scale_total():
    cost = cost_for_n_max(1000)
    assert cost.strip_resistance == pytest.approx(48_000, rel=1e-12)
    r = crossbar_compare(1000, 1000, cost)
    assert r.energy_spin_worst_j == pytest.approx(60e-6, rel=1e-12)


def test_run_energy_trace():
    cost = CostModel()
    assert actual_run_energy([], 816, 0.5e-9) == 0.0
    n = 17
    trace = np.full(n**3, cost.i_max)
    assert actual_run_energy(trace, cost.strip_resistance, cost.pulse_width) == pytest.approx(
        n**3 * cost.worst_mac_energy, rel=1e-12)
    low = np.full(10, cost.i_max / 12)
    per = actual_run_energy(low, cost.strip_resistance, cost.pulse_width) / 10
    assert per == pytest.approx(cost.worst_mac_energy / 144, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 50e-6), max_size=200))
def test_run_energy_below_bound(trace):
    cost = CostModel()
    e = actual_run_energy(np.array(trace), cost.strip_resistance, cost.pulse_width)
    assert e <= len(trace) * cost.worst_mac_energy * (1 + 1e-12)


def test_latency():
    cost = CostModel()
    assert latency(1, "parallel", cost) == pytest.approx(4.5e-9, rel=1e-12)
    assert latency(10, "sequential", cost) / latency(10, "parallel", cost) == pytest.approx(100)
    c2 = CostModel(reset_time=1e-9)
    assert latency(2, "sequential", c2) == pytest.approx(8 * 4.5e-9 + 4 * 1e-9)
    assert latency(2, "parallel-array", c2) == pytest.approx(2 * 4.5e-9 + 1e-9)
    with pytest.raises(ValueError):
        latency(0, "parallel", cost)
    with pytest.raises(ValueError):
        latency(2, "diagonal", cost)


def test_cost_validation():
    with pytest.raises(ValueError):
        CostModel(xi=0)
    with pytest.raises(ValueError):
        CostModel(reset_time=-1)


def test_device_counts():
    r = crossbar_compare(10, 17, CostModel())
    assert (r.devices_spin, r.devices_crossbar) == (200, 1000)
    assert r.spin_nonvolatile and not r.crossbar_nonvolatile


@given(st.integers(1, 5000))
def test_device_ratio(n):
    r = crossbar_compare(n, 17, CostModel())
    assert r.device_ratio == n / 2
    assert r.devices_crossbar == n**3 and r.devices_spin == 2 * n * n


def test_breakeven():
    base = cost_for_n_max(17)
    xi = 60 * 17 * AJ
    assert base.worst_mac_energy == pytest.approx(xi, rel=1e-12)
    par = crossbar_compare(10, 17, cost_for_n_max(17, xi=base.worst_mac_energy))
    assert par.energy_crossbar_j == pytest.approx(par.energy_spin_worst_j, rel=1e-15)
    assert par.breakeven_xi_j == pytest.approx(xi, rel=1e-12)
    low = crossbar_compare(10, 17, cost_for_n_max(17, xi=xi / 2))
    assert not low.crossbar_more_dissipative
    assert low.devices_crossbar > low.devices_spin


def test_energy_scales_cubically():
    cost = CostModel()
    ns = np.array([2, 4, 8])
    e = [crossbar_compare(n, 17, cost).energy_spin_worst_j for n in ns]
    slope = np.polyfit(np.log(ns), np.log(e), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.05)


def test_sweep_csv():
    buf = io.StringIO()
    write_sweep_csv([], buf)
    assert buf.getvalue().count("\n") == 1
    buf = io.StringIO()
    write_sweep_csv([crossbar_compare(n, 17, CostModel()) for n in (1, 2)], buf)
    assert len(buf.getvalue().splitlines()) == 3


def test_excluded_terms_listed():
    assert len(EXCLUDED_TERMS) == 3
