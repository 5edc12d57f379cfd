"""Integer matrix multiplication through the multiplier, strip, wall and readout."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .accounting import EXCLUDED_TERMS, CostModel, actual_run_energy, latency
from .magnet import K_B, MagnetParams, reference_params
from .multiplier import (
    Fidelity,
    MtjResistancePair,
    MultiplierCircuit,
    analytic_multiplier,
    multiplier_output,
)
from .readout import ReadoutCircuit, decode_element, decode_sensed, sense_current
from .synapse import (
    DX_CAL,
    DwMobilityModel,
    DwSynapseState,
    HeavyMetalStrip,
    PulseTiming,
    ab_constants,
    apply_pulse,
    reset,
    synapse_conductance,
)


class EncodingError(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class EncodingScheme:
    """Operand n maps to a pulse of amplitude n * step."""

    step: float
    v_max: float = 0.05
    n_min: int = 1
    n_max: int = 12
    c_in: float = 1e-15
    temperature: float = 300.0

    def __post_init__(self):
        if self.c_in <= 0 or self.temperature < 0 or self.v_max <= 0:
            raise ValueError("C_in and v_max must be positive, temperature non-negative")
        if self.step < self.noise_floor * (1 - 1e-12):
            raise ValueError(
                f"step {self.step * 1e3:.4g} mV below the thermal floor "
                f"2*sqrt(kT/C_in) = {self.noise_floor * 1e3:.4g} mV"
            )
        if self.n_max * self.step > self.v_max * (1 + 1e-12):
            raise ValueError(f"n_max * step = {self.n_max * self.step:g} V exceeds v_max")
        if not 0 <= self.n_min <= self.n_max:
            raise ValueError("need 0 <= n_min <= n_max")

    @property
    def noise_floor(self) -> float:
        return 2.0 * math.sqrt(K_B * self.temperature / self.c_in)

    @classmethod
    def thermal(cls, temperature: float = 300.0, c_in: float = 1e-15, v_max: float = 0.05,
                n_min: int = 1) -> "EncodingScheme":
        """Smallest step the input noise allows, and the largest integer that fits."""
        step = 2.0 * math.sqrt(K_B * temperature / c_in)
        return cls(step, v_max, n_min, int(math.floor(v_max / step + 1e-12)), c_in, temperature)

    def operand_range(self, fidelity: Fidelity | str) -> tuple[int, int]:
        lo = self.n_min if Fidelity(fidelity) is Fidelity.IDEAL else max(1, self.n_min)
        return lo, self.n_max


def encode(n: int, scheme: EncodingScheme) -> float:
    if not scheme.n_min <= n <= scheme.n_max:
        raise EncodingError(f"operand {n} outside [{scheme.n_min}, {scheme.n_max}]")
    return n * scheme.step


@dataclass
class MacUnit:
    """One multiplier feeding one strip and wall, read by one bridge."""

    multiplier: MultiplierCircuit
    strip: HeavyMetalStrip
    synapse: DwSynapseState
    mobility: DwMobilityModel
    timing: PulseTiming
    readout: ReadoutCircuit
    scheme: EncodingScheme


@dataclass
class ElementDiagnostics:
    currents: np.ndarray  # strip current per pulse, A
    drive: np.ndarray  # current magnitude handed to the wall, A
    saturated: bool
    out_of_window: bool
    x: float


def compute_element(row: Sequence[int], col: Sequence[int], unit: MacUnit,
                    fidelity: Fidelity | str = Fidelity.COMPENSATED,
                    rng: np.random.Generator | None = None,
                    noise: bool = True) -> tuple[float, ElementDiagnostics]:
    """Accumulate sum_m row[m] * col[m] on the wall and decode it.

    The unit is reset before and after, whatever state it arrives in.
    """
    fidelity = Fidelity(fidelity)
    if len(row) != len(col):
        raise DimensionError(f"row length {len(row)} != column length {len(col)}")
    lo, hi = unit.scheme.operand_range(fidelity)
    syn = unit.synapse
    reset(syn)
    if rng is not None:
        syn.rng = rng
    circ = unit.multiplier
    strip_i = np.zeros(len(row))
    drive = np.zeros(len(row))
    oow = False
    for m, (a, b) in enumerate(zip(row, col)):
        for k, n in (("row", a), ("col", b)):
            if not lo <= n <= hi:
                raise EncodingError(f"{k} operand {n} at position {m} outside [{lo}, {hi}]")
        v1, v2 = a * unit.scheme.step, b * unit.scheme.step
        if fidelity is not Fidelity.IDEAL and not circ.in_window(v1):
            oow = True
        out = multiplier_output(v1, v2, circ, fidelity)
        drive[m] = abs(out)
        strip_i[m] = drive[m] if fidelity is Fidelity.IDEAL else abs(circ.raw_current(v1, v2))
        apply_pulse(syn, drive[m], unit.strip, unit.mobility, unit.timing, noise=noise)
    ab = ab_constants(syn)
    g = synapse_conductance(syn)
    if fidelity is Fidelity.IDEAL:
        c = decode_element(g, ab, unit.readout)
    else:
        c = decode_sensed(sense_current(g, unit.readout), ab, unit.readout)
    diag = ElementDiagnostics(strip_i, drive, syn.saturated, oow, syn.x)
    reset(syn)
    return float(c), diag


def oracle_matmul(a, b) -> list[list[int]]:
    """Plain integer triple loop; shares nothing with the physical pipeline."""
    a = [[int(v) for v in r] for r in a]
    b = [[int(v) for v in r] for r in b]
    n, k = len(a), len(b)
    if any(len(r) != k for r in a):
        raise DimensionError("columns of A must equal rows of B")
    p = len(b[0]) if b else 0
    if any(len(r) != p for r in b):
        raise DimensionError("B is ragged")
    out = [[0] * p for _ in range(n)]
    for i in range(n):
        for j in range(p):
            s = 0
            for m in range(k):
                s += a[i][m] * b[m][j]
            out[i][j] = s
    return out


def element_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i, j))))


@dataclass
class RunReport:
    decoded: np.ndarray
    rounded: np.ndarray
    oracle: np.ndarray
    abs_error: np.ndarray
    error_rate: float
    saturated: np.ndarray
    out_of_window: np.ndarray
    currents: np.ndarray  # (N, N, N) strip current per pulse
    energy_j: float
    energy_worst_j: float
    latency_s: float
    devices: int
    mode: str
    fidelity: str
    noise: bool
    seed: int
    excluded: tuple[str, ...] = EXCLUDED_TERMS
    r_dt: float = field(default=0.0, repr=False)  # strip R times pulse width

    @property
    def n(self) -> int:
        return self.decoded.shape[0]

    def summary(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode,
            "fidelity": self.fidelity,
            "noise": "on" if self.noise else "off",
            "seed": self.seed,
            "error_rate": self.error_rate,
            "max_abs_error": float(self.abs_error.max()),
            "mean_bias": float(np.mean(self.decoded - self.oracle)),
            "saturated_elements": int(self.saturated.sum()),
            "out_of_window_elements": int(self.out_of_window.sum()),
            "energy_j": self.energy_j,
            "energy_worst_case_j": self.energy_worst_j,
            "latency_s": self.latency_s,
            "devices": self.devices,
            "excluded": "; ".join(self.excluded),
        }

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "decoded", "rounded", "oracle", "abs_error",
                    "saturated", "out_of_window", "energy_j"])
        n = self.n
        for i in range(n):
            for j in range(n):
                e = float(np.sum(self.currents[i, j] ** 2)) * self.r_dt
                w.writerow([i, j, repr(float(self.decoded[i, j])), int(self.rounded[i, j]),
                            int(self.oracle[i, j]), repr(float(self.abs_error[i, j])),
                            int(self.saturated[i, j]), int(self.out_of_window[i, j]), repr(e)])

    def write_summary(self, fh: TextIO) -> None:
        for k, v in self.summary().items():
            fh.write(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n")


@dataclass
class MatmulEngine:
    """Everything needed to build MAC units plus the per-fidelity decode scales."""

    multiplier: MultiplierCircuit
    scheme: EncodingScheme
    strip: HeavyMetalStrip
    mobility: DwMobilityModel
    timing: PulseTiming
    synapse: DwSynapseState
    readout: ReadoutCircuit
    cost: CostModel
    full_scale_step: float = DX_CAL
    decode_scales: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return int(math.floor(self.synapse.layer_length / self.full_scale_step + 1e-9))

    def _unit(self, scale: float) -> MacUnit:
        syn = replace(self.synapse, x=0.0, saturated=False, rng=np.random.default_rng(0))
        return MacUnit(self.multiplier, self.strip, syn, self.mobility, self.timing,
                       replace(self.readout, decode_scale=scale), self.scheme)

    def decode_scale(self, fidelity: Fidelity | str) -> float:
        """Scale making a noiseless 1 x 1 product decode to exactly 1.

        Exact mode reuses the compensated scale so its offset stays visible.
        """
        fidelity = Fidelity(fidelity)
        key = Fidelity.COMPENSATED if fidelity is Fidelity.EXACT else fidelity
        if key not in self.decode_scales:
            raw, _ = compute_element([1], [1], self._unit(1.0), key, noise=False)
            if not raw > 0:
                raise ValueError("unit product produced no wall displacement")
            self.decode_scales[key] = 1.0 / raw
        return self.decode_scales[key]

    def unit(self, fidelity: Fidelity | str) -> MacUnit:
        return self._unit(self.decode_scale(fidelity))

    def check_size(self, n: int) -> None:
        if n > self.n_max:
            L = self.synapse.layer_length * 1e9
            s = self.full_scale_step * 1e9
            raise DimensionError(
                f"N = {n} exceeds N_max = {self.n_max} = floor({L:g} nm / {s:g} nm): "
                "a full row of maximum operands would run the wall off the free layer"
            )


def build_engine(params: MagnetParams, pair: MtjResistancePair, scheme: EncodingScheme,
                 strip: HeavyMetalStrip, mobility: DwMobilityModel, timing: PulseTiming,
                 synapse: DwSynapseState, readout: ReadoutCircuit, cost: CostModel,
                 full_scale_step: float = DX_CAL) -> MatmulEngine:
    """The strip doubles as the multiplier's series resistor."""
    circ = analytic_multiplier(params, pair, strip.resistance, scheme.v_max)
    return MatmulEngine(circ, scheme, strip, mobility, timing, synapse, readout, cost,
                        full_scale_step)


def default_engine(params: MagnetParams | None = None,
                   pair: MtjResistancePair | None = None,
                   scheme: EncodingScheme | None = None,
                   mobility: DwMobilityModel | None = None,
                   timing: PulseTiming | None = None,
                   synapse: DwSynapseState | None = None,
                   n_max: int = 17, xi: float = 1e-15,
                   g0_ratio: float = 100.0) -> MatmulEngine:
    params = params or reference_params()
    pair = pair or MtjResistancePair()
    scheme = scheme or EncodingScheme.thermal(params.temperature)
    timing = timing or PulseTiming()
    synapse = synapse or DwSynapseState()
    strip = HeavyMetalStrip.for_n_max(n_max)
    cost = CostModel(timing.pulse_width, timing.rest_period, 0.0, strip.resistance,
                     scheme.v_max / pair.r_p, xi)
    return build_engine(params, pair, scheme, strip, mobility or DwMobilityModel(), timing,
                        synapse, ReadoutCircuit.for_synapse(synapse, g0_ratio), cost)


def matmul(a, b, engine: MatmulEngine, mode: str = "sequential",
           fidelity: Fidelity | str = Fidelity.COMPENSATED, noise: bool = True,
           seed: int = 0, workers: int = 1) -> RunReport:
    """N x N product on one reused unit (sequential) or N^2 units (parallel-array)."""
    fidelity = Fidelity(fidelity)
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionError(f"need two square matrices of equal size, got {a.shape} and {b.shape}")
    n = a.shape[0]
    if n < 1:
        raise DimensionError("N must be >= 1")
    engine.check_size(n)
    lo, hi = engine.scheme.operand_range(fidelity)
    for name, mat in (("A", a), ("B", b)):
        bad = np.argwhere((mat < lo) | (mat > hi))
        if len(bad):
            i, j = bad[0]
            raise EncodingError(f"{name}[{i},{j}] = {mat[i, j]} outside [{lo}, {hi}]")
    if mode not in ("sequential", "parallel-array", "parallel"):
        raise ValueError(f"unknown mode {mode!r}")
    parallel = mode != "sequential"

    oracle = np.array(oracle_matmul(a.tolist(), b.tolist()), dtype=np.int64)
    decoded = np.zeros((n, n))
    sat = np.zeros((n, n), dtype=bool)
    oow = np.zeros((n, n), dtype=bool)
    currents = np.zeros((n, n, n))
    idx = [(i, j) for i in range(n) for j in range(n)]

    def run(ij, unit):
        i, j = ij
        return compute_element(a[i].tolist(), b[:, j].tolist(), unit, fidelity,
                               element_rng(seed, i, j), noise)

    if parallel:
        units = [engine.unit(fidelity) for _ in idx]
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                results = list(ex.map(run, idx, units))
        else:
            results = [run(ij, u) for ij, u in zip(idx, units)]
        devices = 2 * n * n
    else:
        unit = engine.unit(fidelity)
        results = [run(ij, unit) for ij in idx]
        devices = 2
    for (i, j), (c, d) in zip(idx, results):
        decoded[i, j] = c
        sat[i, j] = d.saturated
        oow[i, j] = d.out_of_window
        currents[i, j] = d.currents

    rounded = np.rint(decoded).astype(np.int64)
    r, dt = engine.strip.resistance, engine.timing.pulse_width
    return RunReport(
        decoded=decoded,
        rounded=rounded,
        oracle=oracle,
        abs_error=np.abs(decoded - oracle),
        error_rate=float(np.mean(rounded != oracle)),
        saturated=sat,
        out_of_window=oow,
        currents=currents,
        energy_j=actual_run_energy(currents.ravel(), r, dt),
        energy_worst_j=n**3 * engine.cost.worst_mac_energy,
        latency_s=latency(n, "parallel" if parallel else "sequential", engine.cost),
        devices=devices,
        mode="parallel-array" if parallel else "sequential",
        fidelity=fidelity.value,
        noise=noise,
        seed=seed,
        r_dt=r * dt,
    )


def read_matrix(path) -> np.ndarray:
    """First line N, then N rows of N integers."""
    path = Path(path)
    lines = [(k, ln.strip()) for k, ln in enumerate(path.read_text().splitlines(), 1)
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    k0, first = lines[0]
    try:
        n = int(first)
    except ValueError:
        raise ValueError(f"{path}:{k0}: expected N, got {first!r}") from None
    if n < 1:
        raise ValueError(f"{path}:{k0}: N must be >= 1")
    rows = lines[1:]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(rows)}")
    out = np.zeros((n, n), dtype=np.int64)
    for i, (k, ln) in enumerate(rows):
        parts = ln.replace(",", " ").split()
        if len(parts) != n:
            raise ValueError(f"{path}:{k}: expected {n} integers, found {len(parts)}")
        try:
            out[i] = [int(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}:{k}: non-integer entry") from None
    return out


def write_matrix(m, fh: TextIO) -> None:
    m = np.asarray(m)
    fh.write(f"{m.shape[0]}\n")
    for r in m:
        fh.write(" ".join(str(int(v)) for v in r) + "\n")
