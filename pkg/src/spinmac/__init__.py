"""Analog integer matrix multiplication with straintronic MTJs and domain-wall accumulators."""

from .accounting import (
    CostModel,
    actual_run_energy,
    crossbar_compare,
    crossbar_power_cycle,
    energy_per_mac,
    latency,
)
from .engine import (
    EncodingScheme,
    MacUnit,
    MatmulEngine,
    RunReport,
    compute_element,
    default_engine,
    encode,
    matmul,
    oracle_matmul,
)
from .magnet import (
    MagnetParams,
    compute_demag_factors,
    energy,
    energy_minimum,
    landscape_constants,
    reference_params,
    theta_ss_analytic,
    well_depth,
)
from .multiplier import (
    Fidelity,
    MtjResistancePair,
    fit_linear_region,
    linearized_constants,
    multiplier_output,
    transfer_curve,
)
from .readout import ReadoutCircuit, decode_element, nonvolatility_check, sense_current
from .sllg import SolverConfig, integrate, steady_state_angle
from .synapse import (
    DwMobilityModel,
    DwSynapseState,
    HeavyMetalStrip,
    PulseTiming,
    apply_pulse,
    synapse_conductance,
)
