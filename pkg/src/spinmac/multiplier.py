"""s-MTJ conductance, transfer characteristics and the four-terminal multiplier."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from .magnet import MagnetParams, landscape_constants, theta_ss_analytic
from .sllg import SolverConfig, steady_state_angles


class Fidelity(str, Enum):
    IDEAL = "ideal"
    EXACT = "exact"
    COMPENSATED = "exact-compensated"


class LinearFitError(ValueError):
    pass


class OutOfWindowError(ValueError):
    pass


@dataclass(frozen=True)
class MtjResistancePair:
    r_p: float = 1e3
    r_ap: float = 2e3

    def __post_init__(self):
        if not self.r_ap > self.r_p > 0:
            raise ValueError("need R_AP > R_P > 0")

    @property
    def g_p(self) -> float:
        return 1.0 / self.r_p

    @property
    def g_ap(self) -> float:
        return 1.0 / self.r_ap


def resistance_from_angle(theta, pair: MtjResistancePair):
    theta = np.asarray(theta, dtype=float)
    return pair.r_p + 0.5 * (pair.r_ap - pair.r_p) * (1.0 - np.cos(theta))


def analytic_conductance(v_gate, params: MagnetParams, pair: MtjResistancePair):
    """Closed-form steady-state conductance at gate voltage(s) ``v_gate``."""
    consts = landscape_constants(params)
    v = np.atleast_1d(np.asarray(v_gate, dtype=float))
    theta = np.array([theta_ss_analytic(x, consts).theta for x in v])
    g = 1.0 / resistance_from_angle(theta, pair)
    return g if np.ndim(v_gate) else float(g[0])


@dataclass(frozen=True)
class TransferCharacteristic:
    vg: np.ndarray
    conductance: np.ndarray
    theta: np.ndarray
    theta_std: np.ndarray
    source: str
    pair: MtjResistancePair
    # Standard error of the mean conductance per point (zero for analytic).
    conductance_se: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        d = np.diff(self.vg)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("gate voltages must be strictly monotonic")
        if self.conductance_se is None:
            object.__setattr__(self, "conductance_se", np.zeros_like(self.conductance))
        lo, hi = self.pair.g_ap, self.pair.g_p
        tol = 1e-12 * hi
        if np.any(self.conductance < lo - tol) or np.any(self.conductance > hi + tol):
            raise ValueError("conductance outside [G_AP, G_P]")

    def interpolator(self) -> Callable[[float], float]:
        order = np.argsort(self.vg)
        x, y = self.vg[order], self.conductance[order]
        return lambda v: float(np.interp(v, x, y))

    def write_csv(self, fh, header: dict | None = None) -> None:
        """CSV rows, preceded by ``# key = value`` lines for each header item."""
        for k, v in (header or {}).items():
            fh.write(f"# {k} = {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vg_volts", "conductance_siemens", "theta_deg", "theta_std_deg"])
        for row in zip(self.vg, self.conductance, self.theta, self.theta_std):
            w.writerow([f"{row[0]:.6f}", f"{row[1]:.9e}",
                        f"{np.degrees(row[2]):.6f}", f"{np.degrees(row[3]):.6f}"])

    def to_csv(self, path, header: dict | None = None) -> None:
        with open(Path(path), "w", newline="") as fh:
            self.write_csv(fh, header)


def transfer_curve(vg, params: MagnetParams, pair: MtjResistancePair,
                   source: str = "analytic", cfg: SolverConfig | None = None,
                   strict: bool = False) -> TransferCharacteristic:
    """Sample G(V_G) from the analytic minimum or from sLLG ensembles.

    For the sLLG source each point's conductance is the ensemble mean of the
    per-trajectory conductances. ``strict`` turns unsettled trajectories into
    an error instead of a silently averaged point.
    """
    vg = np.asarray(vg, dtype=float)
    if source == "analytic":
        consts = landscape_constants(params)
        theta = np.array([theta_ss_analytic(v, consts).theta for v in vg])
        g = 1.0 / resistance_from_angle(theta, pair)
        zeros = np.zeros_like(vg)
        return TransferCharacteristic(vg, g, theta, zeros, "analytic", pair)
    if source != "sllg":
        raise ValueError(f"unknown transfer source {source!r}")
    cfg = cfg or SolverConfig()
    results = steady_state_angles(vg, params, cfg)
    if strict:
        bad = [float(v) for v, r in zip(vg, results) if not r.all_converged]
        if bad:
            raise RuntimeError(f"sLLG did not settle at V_G = {bad}")
    theta = np.array([r.mean for r in results])
    std = np.array([r.std for r in results])
    per_g = [1.0 / resistance_from_angle(r.per_trajectory, pair) for r in results]
    g = np.array([x.mean() for x in per_g])
    se = np.array([x.std() / np.sqrt(len(x)) for x in per_g])
    return TransferCharacteristic(vg, g, theta, std, "sllg", pair, se)


@dataclass(frozen=True)
class LinearFit:
    """G = G_AP + kappa * (V_G - delta) over ``window`` (volts).

    ``residual`` is the largest deviation from the line divided by the
    conductance swing across the window; ``residual_gap`` divides the same
    deviation by G_AP instead.
    """

    kappa: float
    delta: float
    window: tuple[float, float]
    residual: float
    residual_gap: float = 0.0
    kappa_err: float = 0.0
    delta_err: float = 0.0
    n_points: int = 0

    def __post_init__(self):
        lo, hi = self.window
        if not lo < hi:
            raise ValueError("fit window must be non-empty")

    def summary(self) -> dict[str, float]:
        return {
            "kappa_s_per_v": self.kappa,
            "kappa_per_kohm_v": self.kappa * 1e3,
            "kappa_err_per_kohm_v": self.kappa_err * 1e3,
            "delta_v": self.delta,
            "delta_err_v": self.delta_err,
            "window_lo_v": self.window[0],
            "window_hi_v": self.window[1],
            "residual": self.residual,
            "residual_gap": self.residual_gap,
        }


def linearized_constants(params: MagnetParams, pair: MtjResistancePair) -> tuple[float, float]:
    """(kappa, delta) of the first-order expansion around the threshold.

    kappa = -1 / (2 R_AP Gamma) and delta = gamma - Gamma. The expansion keeps
    only the R_AP term of the denominator, so kappa is about twice the true
    slope of the closed-form curve at the knee,
    -(R_AP - R_P) / (2 R_AP**2 Gamma).
    """
    c = landscape_constants(params)
    return -1.0 / (2 * pair.r_ap * c.big_gamma), c.small_gamma - c.big_gamma


def _line_fit(v, g, g_ap, se):
    if np.all(se > 0):
        w = 1.0 / se
    else:
        w = None
    if len(v) > 3:
        coef, cov = np.polyfit(v, g, 1, w=w, cov=True)
    else:
        coef, cov = np.polyfit(v, g, 1, w=w), np.zeros((2, 2))
    k, b = coef
    resid = np.max(np.abs(g - (k * v + b)))
    return k, b, cov, resid


def fit_linear_region(curve: TransferCharacteristic, max_residual: float = 0.05,
                      knee_fraction: float = 0.02, min_points: int = 3) -> LinearFit:
    """Least-squares line over the widest linear window past the knee.

    The knee is the end of the contiguous run of samples, starting at the
    largest excess over G_AP, whose excess stays above ``knee_fraction`` of
    that maximum (and above three standard errors). The
    window starts there and grows one sample at a time into the active
    region while the max deviation from the fitted line stays below
    ``max_residual`` times the conductance swing inside the window.
    """
    if len(curve.vg) < 10:
        raise LinearFitError("need at least 10 samples to locate the knee")
    order = np.argsort(curve.vg)
    v = curve.vg[order]
    g = curve.conductance[order]
    se = curve.conductance_se[order]
    g_ap = curve.pair.g_ap
    excess = g - g_ap
    swing = float(np.max(excess))
    if swing <= 1e-9 * g_ap or swing <= 3 * float(np.max(se, initial=0.0)):
        raise LinearFitError("no linear window: slope indistinguishable from zero")
    level = max(knee_fraction * swing, 3 * float(np.max(se, initial=0.0)))
    active = excess > level
    # Walk from the peak towards the plateau; the knee ends the active run.
    peak = int(np.argmax(excess))
    step = 1 if excess[-1] < excess[0] else -1
    knee = peak
    while 0 <= knee + step < len(v) and active[knee + step]:
        knee += step
    path = np.arange(knee, -1, -1) if step == 1 else np.arange(knee, len(v))
    best = None
    for k in range(min_points, len(path) + 1):
        sel = np.sort(path[:k])
        kap, b, cov, resid = _line_fit(v[sel], g[sel], g_ap, se[sel])
        span = float(np.ptp(g[sel]))
        if span <= 0:
            break
        rel = resid / span
        if rel >= max_residual:
            break
        best = (sel, kap, b, cov, resid, rel)
    if best is None:
        raise LinearFitError("no linear window meets the residual policy")
    sel, kap, b, cov, resid, rel = best
    delta = (g_ap - b) / kap
    var_k, var_b, cov_kb = cov[0, 0], cov[1, 1], cov[0, 1]
    d_dk, d_db = -delta / kap, -1.0 / kap
    var_d = d_dk**2 * var_k + d_db**2 * var_b + 2 * d_dk * d_db * cov_kb
    return LinearFit(
        kappa=float(kap),
        delta=float(delta),
        window=(float(v[sel].min()), float(v[sel].max())),
        residual=float(rel),
        residual_gap=float(resid / g_ap),
        kappa_err=float(np.sqrt(max(var_k, 0.0))),
        delta_err=float(np.sqrt(max(var_d, 0.0))),
        n_points=len(sel),
    )


@dataclass(frozen=True)
class MultiplierCircuit:
    """Single-stage multiplier: s-MTJ in series with the strip resistor.

    The gate is biased at ``fit.delta`` and driven with inverted polarity,
    V_G = delta - V_in1, so positive operands move the s-MTJ into the
    conducting branch where kappa < 0. ``transfer`` maps V_G to conductance.
    """

    pair: MtjResistancePair
    r_series: float
    fit: LinearFit
    transfer: Callable[[float], float]
    v_max: float = 0.05

    def __post_init__(self):
        if self.r_series <= 0:
            raise ValueError("series resistance must be positive")

    def gate_voltage(self, v_in1: float) -> float:
        return self.fit.delta - v_in1

    def in_window(self, v_in1: float) -> bool:
        lo, hi = self.fit.window
        vg = self.gate_voltage(v_in1)
        eps = 1e-12
        return 0 <= v_in1 <= self.v_max + eps and lo - eps <= vg <= hi + eps

    def reference_current(self, v_in2: float) -> float:
        return v_in2 / (self.r_series + self.pair.r_ap)

    def raw_current(self, v_in1: float, v_in2: float) -> float:
        g = self.transfer(self.gate_voltage(v_in1))
        return v_in2 / (self.r_series + 1.0 / g)


def operating_fit(transfer: Callable[[float], float], threshold: float,
                  pair: MtjResistancePair, v_max: float, n: int = 97) -> LinearFit:
    """Zero-intercept line of G - G_AP against V_in1 over the drive range.

    The product law needs G - G_AP to vanish at V_in1 = 0, so the line is
    pinned at the threshold and only its slope is fitted.
    """
    u = np.linspace(0.0, v_max, n)
    excess = np.array([transfer(threshold - x) for x in u]) - pair.g_ap
    slope = float(np.dot(u, excess) / np.dot(u, u))
    if slope <= 0:
        raise LinearFitError("transfer curve does not rise past the threshold")
    line = slope * u
    resid = float(np.max(np.abs(excess - line)))
    span = float(np.ptp(excess))
    return LinearFit(
        kappa=-slope,
        delta=float(threshold),
        window=(float(threshold - v_max), float(threshold)),
        residual=resid / span if span > 0 else 0.0,
        residual_gap=resid / pair.g_ap,
        n_points=n,
    )


def analytic_multiplier(params: MagnetParams, pair: MtjResistancePair, r_series: float,
                        v_max: float = 0.05) -> MultiplierCircuit:
    """Multiplier driven by the closed-form transfer curve, biased at gamma - Gamma."""
    consts = landscape_constants(params)
    threshold = consts.small_gamma - consts.big_gamma

    def transfer(v):
        return analytic_conductance(v, params, pair)

    fit = operating_fit(transfer, threshold, pair, v_max)
    return MultiplierCircuit(pair, r_series, fit, transfer, v_max)


def curve_multiplier(curve: TransferCharacteristic, r_series: float, v_max: float = 0.05,
                     fit: LinearFit | None = None) -> MultiplierCircuit:
    """Multiplier driven by an interpolated (e.g. sLLG) transfer curve."""
    transfer = curve.interpolator()
    fit = fit or fit_linear_region(curve)
    op = operating_fit(transfer, fit.delta, curve.pair, v_max)
    return MultiplierCircuit(curve.pair, r_series, op, transfer, v_max)


def multiplier_output(v_in1: float, v_in2: float, circuit: MultiplierCircuit,
                      fidelity: Fidelity | str = Fidelity.COMPENSATED) -> float:
    """Output current (A) of the multiplier at the requested fidelity.

    ideal: kappa * V_in1 * V_in2, rejecting operands outside the fit window.
    exact: V_in2 / (R + R_sMTJ(V_G)).
    exact-compensated: exact minus the V_in2 / (R + R_AP) reference branch.
    """
    fidelity = Fidelity(fidelity)
    if fidelity is Fidelity.IDEAL:
        if not circuit.in_window(v_in1):
            raise OutOfWindowError(f"V_in1 = {v_in1:g} V outside the linear window")
        return circuit.fit.kappa * v_in1 * v_in2
    raw = circuit.raw_current(v_in1, v_in2)
    if fidelity is Fidelity.EXACT:
        return raw
    return raw - circuit.reference_current(v_in2)
