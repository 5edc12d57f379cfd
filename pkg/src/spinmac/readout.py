"""Bridge readout of the accumulator p-MTJ and decoding to product values."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .synapse import DwSynapseState, ab_constants, synapse_conductance


class ReadoutWarning(UserWarning):
    pass


class NonvolatilityError(AssertionError):
    pass


@dataclass(frozen=True)
class ReadoutCircuit:
    """Source V_s, reference conductance A and sense conductor G_0.

    ``decode_scale`` converts wall displacement (m) into product units and is
    set by the engine's unit-product calibration.
    """

    v_s: float
    a_ref: float
    g0: float
    decode_scale: float = 1.0
    ratio_min: float = 100.0

    def __post_init__(self):
        if self.g0 <= 0 or self.a_ref <= 0:
            raise ValueError("G_0 and A must be positive")
        if self.v_s == 0:
            raise ValueError("V_s must be non-zero")

    @property
    def ratio_ok(self) -> bool:
        return self.g0 >= self.ratio_min * self.a_ref

    @classmethod
    def for_synapse(cls, state: DwSynapseState, g0_ratio: float = 100.0,
                    i_sense_max: float = 0.5e-6, decode_scale: float = 1.0,
                    ratio_min: float = 100.0) -> "ReadoutCircuit":
        """Reference A from the synapse; V_s proportional to 1/B.

        V_s is sized so a wall at the far end drives at most ``i_sense_max``
        through the sense conductor.
        """
        a, b = ab_constants(state)
        v_s = i_sense_max / (b * state.x_max)
        return cls(v_s, a, g0_ratio * a, decode_scale, ratio_min)


def sense_current(g_pmtj: float, circuit: ReadoutCircuit) -> float:
    """Exact current through G_0 for the two-branch bridge."""
    if not circuit.ratio_ok:
        warnings.warn(
            f"G_0/A = {circuit.g0 / circuit.a_ref:.3g} below {circuit.ratio_min:g}; "
            "the linear readout approximation degrades",
            ReadoutWarning,
            stacklevel=2,
        )
    g0, vs = circuit.g0, circuit.v_s
    return -vs / (1 / g_pmtj + 1 / g0) + vs / (1 / circuit.a_ref + 1 / g0)


def decode_element(g_pmtj: float, ab: tuple[float, float], circuit: ReadoutCircuit) -> float:
    """(A - G) / B, i.e. the wall displacement, times the decode scale."""
    a, b = ab
    if b <= 0:
        raise ValueError("B must be positive")
    return (a - g_pmtj) / b * circuit.decode_scale


def decode_sensed(current: float, ab: tuple[float, float], circuit: ReadoutCircuit) -> float:
    """Decode from the sensed current using I = V_s (A - G), the large-G_0 limit."""
    a, b = ab
    if b <= 0:
        raise ValueError("B must be positive")
    return current / (circuit.v_s * b) * circuit.decode_scale


def power_cycle(state: DwSynapseState) -> DwSynapseState:
    """All sources off, then back on.

    The wall position is magnetic state, not charge, so nothing in the
    synapse changes; only the (stateless) sources are cycled.
    """
    return state


def nonvolatility_check(state: DwSynapseState, circuit: ReadoutCircuit) -> dict:
    """Decode, power-cycle, then decode again with only V_s restored.

    Raises :class:`NonvolatilityError` if the two readings differ at all.
    """
    ab = ab_constants(state)
    before = decode_sensed(sense_current(synapse_conductance(state), circuit), ab, circuit)
    x_before = state.x
    power_cycle(state)
    after = decode_sensed(sense_current(synapse_conductance(state), circuit), ab, circuit)
    if state.x != x_before or before != after:
        raise NonvolatilityError(f"decoded value changed across power cycle: {before} -> {after}")
    return {"before": before, "after": after, "recoverable": True}
