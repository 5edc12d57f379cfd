"""Stochastic Landau-Lifshitz-Gilbert dynamics of the single-domain soft layer.

The integrator is stochastic Heun (Stratonovich predictor-corrector) with the
unit vector renormalized after each step. Trajectories are batched as rows of
an (n, 3) array. Every trajectory draws from its own Philox stream keyed by
``(seed, stream, index)``, so results do not depend on batching or on the
number of worker threads.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .magnet import K_B, MU0, MagnetParams, stress_from_gate

GYROMAGNETIC_RATIO = 2.211e5  # m / (A s)

# Noise is drawn per trajectory in fixed-size blocks; the block size is part of
# the reproducibility contract (changing it changes the streams' consumption).
_NOISE_BLOCK = 1024


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-12
    t_max: float = 20e-9
    temperature: float = 300.0
    trajectories: int = 100
    seed: int = 0
    steady_window: float = 2e-9
    steady_tol: float = np.deg2rad(1.0)
    # In-plane tilt of the initial state when there is no thermal spread.
    min_tilt: float = 1e-3
    sample_every: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.t_max >= self.steady_window > 0:
            raise ValueError("need t_max >= steady_window > 0")
        if self.trajectories < 1:
            raise ValueError("at least one trajectory is required")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.sample_every < 1 or self.workers < 1:
            raise ValueError("sample_every and workers must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def window_steps(self) -> int:
        return max(int(round(self.steady_window / self.dt)), 1)


@dataclass
class Trajectory:
    t: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_ns", "theta_deg", "phi_deg"])
            for t, th, ph in zip(self.t, self.theta, self.phi):
                w.writerow([f"{t * 1e9:.6f}", f"{np.degrees(th):.6f}", f"{np.degrees(ph):.6f}"])


@dataclass
class SteadyState:
    """Ensemble result of :func:`steady_state_angle` (angles in rad)."""

    mean: float
    std: float
    per_trajectory: np.ndarray
    converged: np.ndarray = field(repr=False)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


class IntegrationError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


def angles(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polar angle from +z and azimuth from +x in the x-y plane."""
    theta = np.arccos(np.clip(m[..., 2], -1.0, 1.0))
    phi = np.arctan2(m[..., 1], m[..., 0])
    return theta, phi


def from_angles(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def energy_cartesian(m, v_gate, params: MagnetParams):
    """Full 3D energy (J) for unit vector(s) ``m``.

    Reduces exactly to :func:`spinmac.magnet.energy` for m = (0, sin t, cos t).
    """
    m = np.asarray(m, dtype=float)
    mat = params.material
    n = params.demag.as_array()
    omega = params.volume
    sigma = stress_from_gate(v_gate, mat, params.piezo)
    demag = 0.5 * MU0 * mat.saturation_magnetization**2 * omega * np.sum(n * m * m, axis=-1)
    stress = -1.5 * mat.magnetostriction * sigma * omega * m[..., 2] ** 2
    dipole = params.moment_scale() * params.dipole.magnitude * m[..., 2]
    return demag + stress + dipole


def effective_field(m, v_gate, params: MagnetParams, thermal=None):
    """Effective field (A/m): -dE/dm / (mu0 Ms V) plus the thermal field."""
    m = np.asarray(m, dtype=float)
    v_gate = np.asarray(v_gate, dtype=float)
    mat = params.material
    ms = mat.saturation_magnetization
    n = params.demag.as_array()
    sigma = stress_from_gate(v_gate, mat, params.piezo)
    h = -ms * n * m
    hz = h[..., 2] + 3 * mat.magnetostriction * sigma / (MU0 * ms) * m[..., 2]
    h = np.concatenate([h[..., :2], (hz - params.dipole.magnitude)[..., None]], axis=-1)
    if thermal is not None:
        h = h + thermal
    return h


def thermal_sigma(dt: float, temperature: float, params: MagnetParams,
                  gamma: float = GYROMAGNETIC_RATIO) -> float:
    """Per-component standard deviation of the Brown thermal field (A/m)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if temperature == 0:
        return 0.0
    kT = K_B * temperature
    alpha = params.material.damping
    var = 2 * alpha * kT / (gamma * params.moment_scale() * dt)
    return float(np.sqrt(var))


def thermal_field_sample(dt, temperature, params: MagnetParams, rng, size=None):
    sigma = thermal_sigma(dt, temperature, params)
    shape = (3,) if size is None else (size, 3)
    if sigma == 0:
        return np.zeros(shape)
    return sigma * rng.standard_normal(shape)


def trajectory_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


def _cross(a, b):
    return np.stack(
        [
            a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1],
            a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2],
            a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0],
        ],
        axis=1,
    )


def _normalize(m):
    norm = np.sqrt(m[:, 0] * m[:, 0] + m[:, 1] * m[:, 1] + m[:, 2] * m[:, 2])
    return m / norm[:, None]


def _llg_rhs(m, h, gamma, alpha):
    mxh = _cross(m, h)
    return -gamma / (1 + alpha * alpha) * (mxh + alpha * _cross(m, mxh))


def initial_state(params: MagnetParams, temperature: float, rng, min_tilt: float = 1e-3):
    """Rest state at 180 deg with a small random tilt.

    With T > 0 the tilt components are drawn from the Boltzmann distribution
    of the quadratic energy around -z at zero gate voltage. At T = 0 an
    in-plane tilt of ``min_tilt`` with random sign breaks the torque-free
    stationary point.
    """
    mat = params.material
    ms = mat.saturation_magnetization
    n = params.demag
    scale = params.moment_scale()
    k_x = scale * (ms * (n.nxx - n.nzz) + params.dipole.magnitude)
    k_y = scale * (ms * (n.nyy - n.nzz) + params.dipole.magnitude)
    z = rng.standard_normal(2)
    if temperature > 0:
        kT = K_B * temperature
        dx = z[0] * np.sqrt(kT / k_x)
        dy = z[1] * np.sqrt(kT / k_y)
    else:
        dx = 0.0
        dy = min_tilt * (1.0 if z[1] >= 0 else -1.0)
    m = np.array([dx, dy, -1.0])
    return m / np.linalg.norm(m)


def _integrate_batch(m0, v_gate, params, cfg: SolverConfig, rngs, record_from=0):
    """Heun integration of a batch; returns sampled times and angles.

    Samples are taken every ``cfg.sample_every`` steps starting at step
    ``record_from``; the final-window statistics use every step.
    """
    n = m0.shape[0]
    gamma = GYROMAGNETIC_RATIO
    alpha = params.material.damping
    dt = cfg.dt
    sigma = thermal_sigma(dt, cfg.temperature, params, gamma)
    v = np.broadcast_to(np.asarray(v_gate, dtype=float), (n,))
    n_steps = cfg.n_steps
    w = cfg.window_steps
    m = m0.copy()
    ts, thetas, phis = [0.0], [angles(m)[0]], [angles(m)[1]]
    # Running sums for the last two windows (drift check) and the last one.
    win_sum = np.zeros((2, n))
    win_sq = np.zeros(n)
    start_prev, start_last = n_steps - 2 * w, n_steps - w
    noise = None
    for step in range(n_steps):
        j = step % _NOISE_BLOCK
        if sigma > 0 and j == 0:
            block = min(_NOISE_BLOCK, n_steps - step)
            noise = np.stack([r.standard_normal((_NOISE_BLOCK, 3))[:block] for r in rngs], axis=1)
            noise *= sigma
        h_th = noise[j] if sigma > 0 else None
        h0 = effective_field(m, v, params, h_th)
        k0 = _llg_rhs(m, h0, gamma, alpha)
        mp = _normalize(m + dt * k0)
        h1 = effective_field(mp, v, params, h_th)
        k1 = _llg_rhs(mp, h1, gamma, alpha)
        m = _normalize(m + 0.5 * dt * (k0 + k1))
        if not np.all(np.isfinite(m)):
            raise IntegrationError(f"non-finite magnetization at step {step + 1}")
        th = np.arccos(np.clip(m[:, 2], -1.0, 1.0))
        if step >= start_prev:
            win_sum[0 if step < start_last else 1] += th
        if step >= start_last:
            win_sq += th * th
        if (step + 1) % cfg.sample_every == 0 and step + 1 >= record_from:
            ts.append((step + 1) * dt)
            thetas.append(th)
            phis.append(np.arctan2(m[:, 1], m[:, 0]))
    mean_last = win_sum[1] / w
    var_last = np.maximum(win_sq / w - mean_last**2, 0.0)
    if start_prev >= 0:
        drift = np.abs(mean_last - win_sum[0] / w)
    else:
        drift = np.full(n, np.inf)
    return (np.array(ts), np.array(thetas).T, np.array(phis).T, m,
            mean_last, np.sqrt(var_last), drift)


def integrate(v_gate: float, params: MagnetParams, cfg: SolverConfig,
              initial: np.ndarray | None = None, index: int = 0, stream: int = 0) -> Trajectory:
    """Single trajectory after switching the gate on abruptly at t = 0."""
    rng = trajectory_rng(cfg.seed, index, stream)
    if initial is None:
        m0 = initial_state(params, cfg.temperature, rng, cfg.min_tilt)
    else:
        m0 = np.asarray(initial, dtype=float)
        m0 = m0 / np.linalg.norm(m0)
    t, theta, phi, *_ = _integrate_batch(m0[None, :], v_gate, params, cfg, [rng])
    return Trajectory(t, theta[0], phi[0])


def _run_ensemble(v_gates, params, cfg: SolverConfig, stream_ids, n_traj):
    """Steady-window statistics for every (voltage, trajectory) pair."""
    rows = [(k, j) for k in range(len(v_gates)) for j in range(n_traj)]
    rngs = [trajectory_rng(cfg.seed, j, stream_ids[k]) for k, j in rows]
    m0 = np.array([initial_state(params, cfg.temperature, r, cfg.min_tilt) for r in rngs])
    v = np.array([v_gates[k] for k, _ in rows])
    n_rows = len(rows)
    n_chunks = min(cfg.workers, n_rows)
    bounds = np.linspace(0, n_rows, n_chunks + 1).astype(int)
    # Only the end-of-run statistics are needed; skip trajectory sampling.
    no_samples = replace(cfg, sample_every=cfg.n_steps + 1)

    def work(lo_hi):
        lo, hi = lo_hi
        out = _integrate_batch(m0[lo:hi], v[lo:hi], params, no_samples, rngs[lo:hi])
        return out[4], out[5], out[6]

    chunks = list(zip(bounds[:-1], bounds[1:]))
    if n_chunks == 1:
        results = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=n_chunks) as pool:
            results = list(pool.map(work, chunks))
    mean = np.concatenate([r[0] for r in results]).reshape(len(v_gates), n_traj)
    drift = np.concatenate([r[2] for r in results]).reshape(len(v_gates), n_traj)
    return mean, drift


def steady_state_angles(v_gates, params: MagnetParams, cfg: SolverConfig,
                        streams=None) -> list[SteadyState]:
    """:func:`steady_state_angle` for several gate voltages in one batch."""
    v_gates = [float(v) for v in np.atleast_1d(v_gates)]
    if streams is None:
        streams = list(range(len(v_gates)))
    params = params.with_temperature(cfg.temperature)
    mean, drift = _run_ensemble(v_gates, params, cfg, streams, cfg.trajectories)
    out = []
    for k in range(len(v_gates)):
        per = mean[k]
        out.append(SteadyState(float(per.mean()), float(per.std()), per,
                               drift[k] < cfg.steady_tol))
    return out


def steady_state_angle(v_gate: float, params: MagnetParams, cfg: SolverConfig,
                       stream: int = 0, strict: bool = False) -> SteadyState:
    """Ensemble-averaged steady-state angle at one gate voltage.

    Each trajectory contributes its mean theta over the final
    ``steady_window``. A trajectory counts as converged when that mean moved
    by less than ``steady_tol`` relative to the preceding window. With
    ``strict`` a non-converged trajectory raises :class:`ConvergenceError`.
    """
    res = steady_state_angles([v_gate], params, cfg, [stream])[0]
    if strict and not res.all_converged:
        bad = np.flatnonzero(~res.converged).tolist()
        raise ConvergenceError(f"trajectories {bad} did not settle within t_max")
    return res
