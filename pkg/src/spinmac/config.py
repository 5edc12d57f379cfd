"""Flat ``section.key_unit = value`` configuration and object builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accounting import CostModel
from .engine import EncodingScheme, MatmulEngine, build_engine
from .magnet import (
    DipoleField,
    MagnetMaterial,
    MagnetParams,
    PiezoStack,
    SoftLayerGeometry,
)
from .multiplier import Fidelity, MtjResistancePair
from .readout import ReadoutCircuit
from .sllg import SolverConfig
from .synapse import (
    CalibrationTable,
    DwMobilityModel,
    DwSynapseState,
    HeavyMetalStrip,
    MobilityMode,
    PulseTiming,
)


class ConfigError(ValueError):
    pass


_OPT_FLOAT = "optional-float"
_OPT_STR = "optional-str"

# key -> default; the type of the default is the parsing type.
SCHEMA: dict[str, object] = {
    "soft_layer.major_axis_nm": 800.0,
    "soft_layer.minor_axis_nm": 700.0,
    "soft_layer.thickness_nm": 2.2,
    "material.saturation_magnetization_a_per_m": 8.5e5,
    "material.magnetostriction_ppm": 600.0,
    "material.youngs_modulus_gpa": 120.0,
    "material.damping_unitless": 0.1,
    "piezo.d33_m_per_v": 1.5e-9,
    "piezo.thickness_um": 1.0,
    "dipole.field_oe": 1000.0,
    "magnet.temperature_k": 300.0,
    "magnet.pinned_gamma_v": _OPT_FLOAT,
    "sllg.dt_ps": 1.0,
    "sllg.t_max_ns": 20.0,
    "sllg.trajectories_count": 100,
    "sllg.steady_window_ns": 2.0,
    "sllg.steady_tol_deg": 1.0,
    "transfer.vg_start_v": -0.40,
    "transfer.vg_stop_v": -0.20,
    "transfer.vg_step_mv": 5.0,
    "mtj.r_p_ohm": 1000.0,
    "mtj.r_ap_ohm": 2000.0,
    "strip.resistivity_ohm_m": 1e-7,
    "strip.width_nm": 50.0,
    "strip.thickness_nm": 5.0,
    "strip.spin_hall_angle_unitless": 0.2,
    "strip.n_max_count": 17,
    "synapse.layer_length_nm": 2060.0,
    "synapse.wall_width_nm": 20.0,
    "synapse.g_p_s": 1e-3,
    "synapse.g_ap_s": 5e-4,
    "synapse.g_dw_s": 7.5e-4,
    "mobility.mode_name": "linear",
    "mobility.cal_current_density_a_per_m2": 2e11,
    "mobility.cal_displacement_nm": 120.0,
    "mobility.noise_std_rel_unitless": 0.2,
    "mobility.table_path_file": _OPT_STR,
    "timing.pulse_width_ns": 0.5,
    "timing.rest_period_ns": 4.0,
    "timing.reset_time_ns": 0.0,
    "encoding.temperature_k": 300.0,
    "encoding.c_in_ff": 1.0,
    "encoding.v_max_mv": 50.0,
    "encoding.n_min_count": 1,
    "readout.g0_ratio_unitless": 100.0,
    "readout.i_sense_max_ua": 0.5,
    "accounting.xi_aj": 1000.0,
    # Written by the calibrate command; informational except the decode scales.
    "calibration.kappa_s_per_v": _OPT_FLOAT,
    "calibration.delta_v": _OPT_FLOAT,
    "calibration.eta_m3_per_a": _OPT_FLOAT,
    "calibration.decode_scale_ideal_unitless": _OPT_FLOAT,
    "calibration.decode_scale_compensated_unitless": _OPT_FLOAT,
}


def _parse(key: str, raw: str, where: str):
    kind = SCHEMA[key]
    try:
        if kind in (_OPT_FLOAT, _OPT_STR):
            if raw.lower() in ("", "none"):
                return None
            return float(raw) if kind == _OPT_FLOAT else raw
        if isinstance(kind, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(kind, int):
            return int(raw)
        if isinstance(kind, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: bad value {raw!r} for {key}") from None


@dataclass
class SimulationConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __post_init__(self):
        full = {k: (None if v in (_OPT_FLOAT, _OPT_STR) else v) for k, v in SCHEMA.items()}
        full.update(self.values)
        self.values = full

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **updates) -> "SimulationConfig":
        v = dict(self.values)
        for k, x in updates.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key}")
            v[key] = x
        return SimulationConfig(v, self.source)

    # builders

    def magnet_params(self) -> MagnetParams:
        v = self.values
        p = MagnetParams(
            geometry=SoftLayerGeometry(v["soft_layer.major_axis_nm"] * 1e-9,
                                       v["soft_layer.minor_axis_nm"] * 1e-9,
                                       v["soft_layer.thickness_nm"] * 1e-9),
            material=MagnetMaterial(v["material.saturation_magnetization_a_per_m"],
                                    v["material.magnetostriction_ppm"] * 1e-6,
                                    v["material.youngs_modulus_gpa"] * 1e9,
                                    v["material.damping_unitless"]),
            piezo=PiezoStack(v["piezo.d33_m_per_v"], v["piezo.thickness_um"] * 1e-6),
            dipole=DipoleField.from_oe(v["dipole.field_oe"]),
            temperature=v["magnet.temperature_k"],
        )
        if v["magnet.pinned_gamma_v"] is not None:
            p = p.with_pinned_gamma(v["magnet.pinned_gamma_v"])
        return p

    def solver(self, seed: int = 0, workers: int = 1) -> SolverConfig:
        v = self.values
        return SolverConfig(
            dt=v["sllg.dt_ps"] * 1e-12,
            t_max=v["sllg.t_max_ns"] * 1e-9,
            temperature=v["magnet.temperature_k"],
            trajectories=v["sllg.trajectories_count"],
            seed=seed,
            steady_window=v["sllg.steady_window_ns"] * 1e-9,
            steady_tol=np.deg2rad(v["sllg.steady_tol_deg"]),
            workers=workers,
        )

    def gate_grid(self) -> np.ndarray:
        v = self.values
        a, b, step = v["transfer.vg_start_v"], v["transfer.vg_stop_v"], v["transfer.vg_step_mv"] * 1e-3
        if step <= 0 or a == b:
            raise ConfigError("transfer grid needs distinct end points and a positive step")
        n = int(round(abs(b - a) / step)) + 1
        return np.linspace(a, b, n)

    def pair(self) -> MtjResistancePair:
        return MtjResistancePair(self["mtj.r_p_ohm"], self["mtj.r_ap_ohm"])

    def strip(self) -> HeavyMetalStrip:
        v = self.values
        return HeavyMetalStrip(v["strip.resistivity_ohm_m"], v["strip.width_nm"] * 1e-9,
                               v["strip.thickness_nm"] * 1e-9,
                               v["mobility.cal_displacement_nm"] * 1e-9 * v["strip.n_max_count"],
                               v["strip.spin_hall_angle_unitless"])

    def timing(self) -> PulseTiming:
        return PulseTiming(self["timing.pulse_width_ns"] * 1e-9, self["timing.rest_period_ns"] * 1e-9)

    def synapse(self) -> DwSynapseState:
        v = self.values
        return DwSynapseState(v["synapse.layer_length_nm"] * 1e-9, v["synapse.wall_width_nm"] * 1e-9,
                              g_p=v["synapse.g_p_s"], g_ap=v["synapse.g_ap_s"],
                              g_dw=v["synapse.g_dw_s"])

    def mobility(self) -> DwMobilityModel:
        v = self.values
        mode = MobilityMode(v["mobility.mode_name"])
        table = None
        if mode is MobilityMode.TABLE:
            table = CalibrationTable.load(v["mobility.table_path_file"])
        return DwMobilityModel.fit_linear(
            v["mobility.cal_current_density_a_per_m2"], v["mobility.cal_displacement_nm"] * 1e-9,
            noise_std_rel=v["mobility.noise_std_rel_unitless"], mode=mode, table=table,
        )

    def scheme(self) -> EncodingScheme:
        v = self.values
        return EncodingScheme.thermal(v["encoding.temperature_k"], v["encoding.c_in_ff"] * 1e-15,
                                      v["encoding.v_max_mv"] * 1e-3, v["encoding.n_min_count"])

    def engine(self) -> MatmulEngine:
        v = self.values
        syn = self.synapse()
        scheme = self.scheme()
        strip = self.strip()
        readout = ReadoutCircuit.for_synapse(syn, v["readout.g0_ratio_unitless"],
                                             v["readout.i_sense_max_ua"] * 1e-6)
        eng = build_engine(self.magnet_params(), self.pair(), scheme, strip, self.mobility(),
                           self.timing(), syn, readout, self.cost(strip.resistance),
                           v["mobility.cal_displacement_nm"] * 1e-9)
        for key, fid in (("calibration.decode_scale_ideal_unitless", Fidelity.IDEAL),
                         ("calibration.decode_scale_compensated_unitless", Fidelity.COMPENSATED)):
            if v[key] is not None:
                eng.decode_scales[fid] = v[key]
        return eng

    def cost(self, strip_resistance: float | None = None, i_max: float | None = None) -> CostModel:
        v = self.values
        if strip_resistance is None:
            strip_resistance = self.strip().resistance
        if i_max is None:
            i_max = v["encoding.v_max_mv"] * 1e-3 / v["mtj.r_p_ohm"]
        return CostModel(v["timing.pulse_width_ns"] * 1e-9, v["timing.rest_period_ns"] * 1e-9,
                         v["timing.reset_time_ns"] * 1e-9, strip_resistance, i_max,
                         v["accounting.xi_aj"] * 1e-18)

    def validate(self) -> None:
        """Build every object once so each module re-checks its invariants."""
        try:
            self.magnet_params()
            self.solver()
            self.gate_grid()
            self.pair()
            self.strip()
            self.timing()
            self.synapse()
            self.mobility()
            self.scheme()
            self.cost()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> SimulationConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _parse(key, raw, where)
    cfg = SimulationConfig(values, source)
    cfg.validate()
    return cfg


def load_config(path=None) -> SimulationConfig:
    if path is None:
        return SimulationConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))


def dump_config(cfg: SimulationConfig, keys=None) -> str:
    lines = []
    for k in keys or SCHEMA:
        v = cfg.values[k]
        lines.append(f"{k} = {'none' if v is None else (repr(v) if isinstance(v, float) else v)}")
    return "\n".join(lines) + "\n"
