"""Energy, latency and footprint of the spin multiplier versus a crossbar."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO

import numpy as np

AJ = 1e-18

EXCLUDED_TERMS = (
    "strain-induced rotation of the multiplier soft layer (~1 aJ)",
    "passive resistors of the readout and bias network",
    "domain-wall viscous dissipation",
)


@dataclass(frozen=True)
class CostModel:
    pulse_width: float = 0.5e-9
    rest_period: float = 4.0e-9
    reset_time: float = 0.0
    strip_resistance: float = 48.0 * 17
    i_max: float = 50e-6
    xi: float = 1e-15  # crossbar per-device maximum energy, J

    def __post_init__(self):
        for name in ("pulse_width", "rest_period", "strip_resistance", "i_max", "xi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.reset_time < 0:
            raise ValueError("reset_time must be non-negative")

    @property
    def mac_latency(self) -> float:
        return self.pulse_width + self.rest_period

    @property
    def worst_mac_energy(self) -> float:
        return energy_per_mac(self.i_max, self.strip_resistance, self.pulse_width)


def energy_per_mac(current: float, resistance: float, dt: float) -> float:
    """Joule heating I^2 R dt of one pulse in the heavy-metal strip."""
    if current < 0 or resistance < 0 or dt < 0:
        raise ValueError("current, resistance and pulse width must be non-negative")
    return current * current * resistance * dt


def actual_run_energy(currents: Iterable[float] | np.ndarray, resistance: float, dt: float) -> float:
    """Sum of I_m^2 R dt over every pulse in a run; no current flows at rest."""
    i = np.asarray(list(currents) if not isinstance(currents, np.ndarray) else currents,
                   dtype=float)
    if i.size == 0:
        return 0.0
    return float(np.sum(i * i) * resistance * dt)


def latency(n: int, mode: str, cost: CostModel) -> float:
    """Wall-clock time of an N x N product.

    sequential: N^3 MACs plus one reset per element on a single unit.
    parallel-array: N MACs plus one reset, all elements at once.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    if mode == "sequential":
        return n**3 * cost.mac_latency + n**2 * cost.reset_time
    if mode in ("parallel", "parallel-array"):
        return n * cost.mac_latency + cost.reset_time
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Comparison:
    n: int
    n_max: int
    devices_spin: int
    devices_crossbar: int
    device_ratio: float
    energy_spin_worst_j: float
    energy_crossbar_j: float
    breakeven_xi_j: float
    latency_sequential_s: float
    latency_parallel_s: float
    spin_nonvolatile: bool = True
    crossbar_nonvolatile: bool = False

    @property
    def crossbar_more_dissipative(self) -> bool:
        return self.energy_crossbar_j > self.energy_spin_worst_j


def crossbar_compare(n: int, n_max: int, cost: CostModel) -> Comparison:
    """Device count, worst-case energy and volatility of both architectures.

    The strip resistance is taken as given in ``cost``; callers sizing the
    strip for ``n_max`` pass ``48 * n_max`` ohms (see :func:`cost_for_n_max`).
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    per_mac = cost.worst_mac_energy
    return Comparison(
        n=n,
        n_max=n_max,
        devices_spin=2 * n * n,
        devices_crossbar=n**3,
        device_ratio=n**3 / (2 * n * n),
        energy_spin_worst_j=per_mac * n**3,
        energy_crossbar_j=cost.xi * n**3,
        breakeven_xi_j=per_mac,
        latency_sequential_s=latency(n, "sequential", cost),
        latency_parallel_s=latency(n, "parallel", cost),
    )


def cost_for_n_max(n_max: int, resistivity: float = 1e-7, width: float = 50e-9,
                   thickness: float = 5e-9, step: float = 120e-9, **kw) -> CostModel:
    r = resistivity * step * n_max / (width * thickness)
    return CostModel(strip_resistance=r, **kw)


SWEEP_COLUMNS = [
    "n", "n_max", "devices_spin", "devices_crossbar", "device_ratio",
    "energy_spin_worst_j", "energy_crossbar_j", "breakeven_xi_j",
    "latency_sequential_s", "latency_parallel_s", "spin_nonvolatile", "crossbar_nonvolatile",
]


def write_sweep_csv(rows: Iterable[Comparison], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in SWEEP_COLUMNS])


def crossbar_power_cycle(conductance: np.ndarray, column_voltages: np.ndarray) -> dict:
    """Crossbar column product before and after removing all voltages.

    The product exists only as currents I_i = sum_j G_ij V_j; with the
    sources off the currents vanish and the column voltages are gone.
    """
    g = np.asarray(conductance, dtype=float)
    v = np.asarray(column_voltages, dtype=float)
    before = g @ v
    after = g @ np.zeros_like(v)
    return {
        "before": before,
        "after": after,
        "recoverable": bool(np.array_equal(before, after)),
    }
