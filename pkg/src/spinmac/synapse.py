"""Domain-wall synapse accumulator on a heavy-metal strip.

Each current pulse through the strip moves the wall in the p-MTJ free layer by
a calibrated amount; the p-MTJ conductance is affine in the wall position, so
the accumulated position encodes the running sum of the product currents.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

# Calibration point of the linear mobility: 50 uA in a 250 nm^2 strip.
J_CAL = 2e11  # A/m^2
DX_CAL = 120e-9  # m
PULSE_CAL = 0.5e-9  # s
DX_MIN_CAL = 5e-9  # m, micromagnetic displacement at 1.6e10 A/m^2


@dataclass(frozen=True)
class HeavyMetalStrip:
    resistivity: float = 1e-7
    width: float = 50e-9
    thickness: float = 5e-9
    length: float = 120e-9 * 17
    spin_hall_angle: float = 0.2

    def __post_init__(self):
        if min(self.resistivity, self.width, self.thickness, self.length) <= 0:
            raise ValueError("strip resistivity and dimensions must be positive")

    @property
    def cross_section(self) -> float:
        return self.width * self.thickness

    @property
    def resistance(self) -> float:
        return strip_resistance(self)

    def current_density(self, current: float) -> float:
        return current / self.cross_section

    @classmethod
    def for_n_max(cls, n_max: int, step: float = DX_CAL, **kw) -> "HeavyMetalStrip":
        """Strip sized so ``n_max`` full-scale pulses fit along it."""
        return cls(length=step * n_max, **kw)


def strip_resistance(strip: HeavyMetalStrip) -> float:
    return strip.resistivity * strip.length / strip.cross_section


@dataclass(frozen=True)
class PulseTiming:
    pulse_width: float = 0.5e-9
    rest_period: float = 4.0e-9

    def __post_init__(self):
        if self.pulse_width <= 0 or self.rest_period <= 0:
            raise ValueError("pulse width and rest period must be positive")

    @property
    def period(self) -> float:
        return self.pulse_width + self.rest_period


class MobilityMode(str, Enum):
    LINEAR = "linear"
    TABLE = "table"


@dataclass(frozen=True)
class CalibrationTable:
    current_density: np.ndarray
    mean_dx: np.ndarray
    std_dx: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.current_density, dtype=float)
        if j.ndim != 1 or len(j) < 2:
            raise ValueError("calibration table needs at least two rows")
        if not np.all(np.diff(j) > 0):
            raise ValueError("calibration table current density must be strictly increasing")
        if np.any(j <= 0) or np.any(np.asarray(self.std_dx) < 0):
            raise ValueError("calibration table needs J > 0 and std >= 0")
        if not (len(self.mean_dx) == len(self.std_dx) == len(j)):
            raise ValueError("calibration table columns differ in length")

    @classmethod
    def load(cls, path=None) -> "CalibrationTable":
        """Read rows ``J_A_per_m2, mean_dx_m, std_dx_m``; ``#`` starts a comment."""
        if path is None:
            text = resources.files("spinmac.data").joinpath("dw_mobility_table.csv").read_text()
        else:
            text = Path(path).read_text()
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ValueError(f"calibration table line {lineno}: expected 3 columns")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"calibration table line {lineno}: {exc}") from None
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def lookup(self, j: float) -> tuple[float, float]:
        """Interpolated (mean, std) displacement at current density ``j``.

        Below the first row both scale proportionally from the origin; above
        the last row the final segment is extrapolated.
        """
        jj, mu, sd = self.current_density, self.mean_dx, self.std_dx
        if j <= jj[0]:
            f = j / jj[0]
            return mu[0] * f, sd[0] * f
        if j >= jj[-1]:
            slope = (mu[-1] - mu[-2]) / (jj[-1] - jj[-2])
            return mu[-1] + slope * (j - jj[-1]), sd[-1] * j / jj[-1]
        return float(np.interp(j, jj, mu)), float(np.interp(j, jj, sd))


@dataclass(frozen=True)
class DwMobilityModel:
    """Displacement per pulse: eta * J (linear) or a calibration table.

    ``eta`` is the displacement per unit current density for a pulse of
    ``calibration_pulse_width``; other widths scale linearly.
    """

    eta: float = DX_CAL / J_CAL
    noise_std_rel: float = 0.2
    mode: MobilityMode = MobilityMode.LINEAR
    table: CalibrationTable | None = None
    calibration_pulse_width: float = PULSE_CAL

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("mobility eta must be positive")
        if self.noise_std_rel < 0:
            raise ValueError("noise_std_rel must be non-negative")
        object.__setattr__(self, "mode", MobilityMode(self.mode))
        if self.mode is MobilityMode.TABLE and self.table is None:
            object.__setattr__(self, "table", CalibrationTable.load())

    @classmethod
    def fit_linear(cls, j: float = J_CAL, dx: float = DX_CAL, **kw) -> "DwMobilityModel":
        """Line through the origin and one calibration point."""
        return cls(eta=dx / j, **kw)

    def mean_std(self, j: float, pulse_width: float) -> tuple[float, float]:
        scale = pulse_width / self.calibration_pulse_width
        if self.mode is MobilityMode.LINEAR:
            mean = self.eta * j
            return mean * scale, self.noise_std_rel * mean * scale
        mean, std = self.table.lookup(j)
        return mean * scale, std * scale


@dataclass
class DwSynapseState:
    """Mutable wall position plus the p-MTJ conductances (single owner)."""

    layer_length: float = 2060e-9
    wall_width: float = 20e-9
    x: float = 0.0
    g_p: float = 1e-3
    g_ap: float = 5e-4
    g_dw: float = 7.5e-4
    saturated: bool = False
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0), repr=False)

    def __post_init__(self):
        if self.layer_length <= 0 or self.wall_width <= 0:
            raise ValueError("layer length and wall width must be positive")
        if self.wall_width >= self.layer_length:
            raise ValueError("wall must be narrower than the layer")
        if not self.g_p > self.g_ap > 0 or self.g_dw <= 0:
            raise ValueError("need G_P > G_AP > 0 and G_DW > 0")
        if not 0 <= self.x <= self.x_max:
            raise ValueError("wall position outside [0, L - w]")

    @property
    def x_max(self) -> float:
        return self.layer_length - self.wall_width


def apply_pulse(state: DwSynapseState, current: float, strip: HeavyMetalStrip,
                mobility: DwMobilityModel, timing: PulseTiming,
                rng: np.random.Generator | None = None, noise: bool = True) -> DwSynapseState:
    """Move the wall for one current pulse; returns the (mutated) state.

    The wall position is clamped to [0, L - w]; hitting the far end sets
    ``saturated`` rather than raising.
    """
    if current < 0:
        raise ValueError("pulse current must be non-negative (magnitudes only)")
    if current == 0:
        return state
    j = strip.current_density(current)
    mean, std = mobility.mean_std(j, timing.pulse_width)
    dx = mean
    if noise and std > 0:
        dx = mean + std * (rng or state.rng).standard_normal()
    x = state.x + dx
    if x > state.x_max:
        # Landing exactly on the end (up to rounding) is still a valid position.
        if x > state.x_max * (1 + 1e-9):
            state.saturated = True
        x = state.x_max
    state.x = max(x, 0.0)
    return state


def ab_constants(state: DwSynapseState) -> tuple[float, float]:
    """(A, B) with G = A - B * x."""
    w_frac = state.wall_width / state.layer_length
    a = state.g_dw * w_frac + state.g_p * (1 - w_frac)
    b = (state.g_p - state.g_ap) / state.layer_length
    return a, b


def synapse_conductance(state: DwSynapseState, x: float | None = None) -> float:
    """Three parallel conductors: AP segment, wall, P segment."""
    x = state.x if x is None else x
    L, w = state.layer_length, state.wall_width
    return state.g_ap * x / L + state.g_dw * w / L + state.g_p * (L - x - w) / L


def reset(state: DwSynapseState) -> DwSynapseState:
    state.x = 0.0
    state.saturated = False
    return state
