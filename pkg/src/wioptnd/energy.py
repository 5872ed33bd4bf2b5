"""Ultrasound power link and storage-capacitor dynamics for one implant.

The chain is: source intensity (mW/cm^2) attenuated over tissue depth,
converted by the piezoelectric harvester into electrical power, turned
into a per-vibration-cycle charge packet dQ = i_g / f, and integrated on
the storage capacitor. Charging and discharging voltage follow the usual
RC exponentials expressed in cycle counts rather than seconds, which makes
the stored-energy-versus-wall-clock trajectory independent of the
vibration frequency for a fixed electrical power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import Violation
from .photonics import OpticsParams, required_source_intensity

# Regulatory ceiling for diagnostic ultrasound intensity.
FDA_INTENSITY_CAP_MW_CM2 = 720.0

# Relative slack when comparing stored energy against the pulse energy;
# absorbs the rounding introduced by the energy <-> voltage conversions.
_ENERGY_EPS = 1e-12


def led_pulse_energy_j(optics: OpticsParams, led_distance_mm: float,
                       led_area_mm2: float, pulse_ms: float,
                       led_efficiency: float) -> float:
    """Electrical energy (J) one stimulation pulse must draw from the capacitor.

    Works backwards from the intensity required at the neuron: source
    intensity at the LED times emitting area gives optical power, the
    wall-plug efficiency converts that to electrical power, and the pulse
    width turns power into energy. mW * ms = 1e-6 J.
    """
    if led_area_mm2 <= 0 or pulse_ms <= 0 or not 0 < led_efficiency <= 1:
        raise ValueError("led_area_mm2, pulse_ms must be > 0 and 0 < led_efficiency <= 1")
    source = required_source_intensity(optics, led_distance_mm)  # mW/mm^2
    return source * led_area_mm2 * pulse_ms * 1e-6 / led_efficiency


# Default pulse energy for the default optics at 0.5 mm depth, a
# 1e-4 mm^2 emitter, 1 ms pulses and 30% wall-plug efficiency. With the
# default harvester this level recharges from empty within about one
# 1 ms slot of ultrasound.
DEFAULT_PULSE_ENERGY_J = led_pulse_energy_j(OpticsParams(), 0.5, 1e-4, 1.0, 0.3)


@dataclass(frozen=True)
class EnergyParams:
    """Ultrasound link, harvester and storage-capacitor parameters."""

    source_mw_cm2: float = 720.0        # ultrasound intensity at the emitter
    atten_db_cm_mhz: float = 0.435      # tissue attenuation coefficient
    ultrasound_hz: float = 3.0e6        # vibration frequency of the nanowires
    depth_cm: float = 0.2               # emitter-to-implant tissue depth
    harvester_cm2: float = 1.0e-4       # effective harvester area (100x100 um^2)
    conversion_eff: float = 0.5         # electromechanical conversion rate
    voltage_v: float = 1.0              # generated voltage V_g
    capacitance_f: float = 1.0e-8       # storage capacitance
    pulse_energy_j: float = DEFAULT_PULSE_ENERGY_J  # full-charge energy E_max

    @property
    def e_max_j(self) -> float:
        """Full-charge energy; identical to the per-pulse drain."""
        return self.pulse_energy_j


def validate_energy(p: EnergyParams) -> list[Violation]:
    out = []
    if p.source_mw_cm2 > FDA_INTENSITY_CAP_MW_CM2:
        out.append(Violation(
            "physics", "energy.source_mw_cm2",
            f"{p.source_mw_cm2:g} exceeds the FDA cap of "
            f"{FDA_INTENSITY_CAP_MW_CM2:g} mW/cm^2"))
    positives = [
        ("energy.source_mw_cm2", p.source_mw_cm2),
        ("energy.atten_db_cm_mhz", p.atten_db_cm_mhz),
        ("energy.ultrasound_hz", p.ultrasound_hz),
        ("energy.depth_cm", p.depth_cm),
        ("energy.harvester_cm2", p.harvester_cm2),
        ("energy.voltage_v", p.voltage_v),
        ("energy.capacitance_f", p.capacitance_f),
        ("energy.pulse_energy_j", p.pulse_energy_j),
    ]
    for key, value in positives:
        if not value > 0:
            out.append(Violation("physics", key, "must be > 0"))
    if not 0 < p.conversion_eff <= 1:
        out.append(Violation("physics", "energy.conversion_eff", "must be in (0, 1]"))
    if not 2.0 * p.pulse_energy_j < p.capacitance_f * p.voltage_v ** 2:
        out.append(Violation(
            "physics", "energy.pulse_energy_j",
            "capacitor cannot reach the pulse energy: requires "
            "2*E_max < C*V_g^2 strictly"))
    return out


def intensity_at_depth(p: EnergyParams) -> float:
    """Ultrasound intensity (mW/cm^2) arriving at the harvester."""
    f_mhz = p.ultrasound_hz / 1e6
    return p.source_mw_cm2 * 10.0 ** (-(p.atten_db_cm_mhz * f_mhz * p.depth_cm) / 10.0)


def harvested_electrical_power(p: EnergyParams) -> float:
    """Electrical power (W) after the electromechanical conversion."""
    return intensity_at_depth(p) * 1e-3 * p.harvester_cm2 * p.conversion_eff


def generated_current(p: EnergyParams) -> float:
    """Current (A) flowing from the harvester into the storage circuit."""
    if p.voltage_v <= 0:
        raise ValueError("generated voltage must be > 0")
    return harvested_electrical_power(p) / p.voltage_v


def charge_per_cycle(p: EnergyParams) -> float:
    """Charge packet (C) delivered to the capacitor per vibration cycle."""
    if p.ultrasound_hz <= 0:
        raise ValueError("ultrasound frequency must be > 0")
    return generated_current(p) / p.ultrasound_hz


def _full_charge_ratio(p: EnergyParams) -> float:
    # sqrt(2*E_max / (C * V_g^2)); must be < 1 or charging never reaches E_max
    ratio = math.sqrt(2.0 * p.pulse_energy_j / (p.capacitance_f * p.voltage_v ** 2))
    if ratio >= 1.0:
        raise ValueError(
            "capacitor cannot reach e_max: requires 2*E_max < C*V_g^2 strictly")
    return ratio


def cycles_to_charge(p: EnergyParams) -> int:
    """Vibration cycles needed to charge an empty capacitor up to E_max."""
    ratio = _full_charge_ratio(p)
    tau = p.voltage_v * p.capacitance_f / charge_per_cycle(p)
    return math.ceil(-tau * math.log(1.0 - ratio))


def cycles_to_discharge(p: EnergyParams) -> int:
    """Vibration cycles for the capacitor to fall from V_g to the E_max level."""
    ratio = _full_charge_ratio(p)
    tau = p.voltage_v * p.capacitance_f / charge_per_cycle(p)
    return math.ceil(-tau * math.log(ratio))


def voltage_at_cycle(p: EnergyParams, n_cycles: float, phase: str) -> float:
    """Capacitor voltage after n cycles of charging (from 0 V) or discharging
    (from V_g)."""
    if n_cycles < 0:
        raise ValueError("cycle count must be >= 0")
    x = n_cycles * charge_per_cycle(p) / (p.voltage_v * p.capacitance_f)
    if phase == "charging":
        return p.voltage_v * (1.0 - math.exp(-x))
    if phase == "discharging":
        return p.voltage_v * math.exp(-x)
    raise ValueError(f"unknown phase {phase!r}")


@dataclass(frozen=True)
class CapacitorState:
    """Storage-capacitor snapshot for one implant."""

    voltage_v: float
    stored_j: float
    charge_cycles_elapsed: int = 0
    phase: str = "holding"


def _state_at_voltage(p: EnergyParams, voltage: float, cycles: int, phase: str) -> CapacitorState:
    return CapacitorState(voltage, 0.5 * p.capacitance_f * voltage ** 2, cycles, phase)


def empty_state(p: EnergyParams) -> CapacitorState:
    return _state_at_voltage(p, 0.0, 0, "holding")


def full_state(p: EnergyParams) -> CapacitorState:
    """State holding exactly E_max (the operational full charge)."""
    v = math.sqrt(2.0 * p.pulse_energy_j / p.capacitance_f)
    return CapacitorState(v, p.pulse_energy_j, 0, "holding")


def cycles_per_slot(p: EnergyParams, slot_ms: float) -> int:
    """Vibration cycles applied during one charging slot.

    Rounds half away from zero so a 500 Hz source over a 1 ms slot (0.5
    cycles) still delivers one charge packet instead of silently none.
    """
    return int(math.floor(p.ultrasound_hz * slot_ms * 1e-3 + 0.5))


def step_slot(state: CapacitorState, p: EnergyParams, being_charged: bool,
              slot_ms: float) -> CapacitorState:
    """Advance the capacitor across one time slot.

    When charged, the voltage moves along the charging exponential by
    cycles_per_slot cycles and the stored energy is clamped at E_max;
    otherwise the state is held unchanged (no leakage is modelled).
    """
    if not being_charged:
        if state.phase == "holding":
            return state
        return replace(state, phase="holding")
    n = cycles_per_slot(p, slot_ms)
    x = n * charge_per_cycle(p) / (p.voltage_v * p.capacitance_f)
    v = p.voltage_v - (p.voltage_v - state.voltage_v) * math.exp(-x)
    stored = 0.5 * p.capacitance_f * v ** 2
    if stored > p.pulse_energy_j:
        stored = p.pulse_energy_j
        v = math.sqrt(2.0 * stored / p.capacitance_f)
    return CapacitorState(v, stored, state.charge_cycles_elapsed + n, "charging")


def charge_to_full(state: CapacitorState, p: EnergyParams) -> CapacitorState:
    """Snap the capacitor to E_max, as a dedicated single-device emission does."""
    full = full_state(p)
    if state.stored_j >= full.stored_j:
        return replace(state, phase="charging")
    return CapacitorState(full.voltage_v, full.stored_j,
                          state.charge_cycles_elapsed, "charging")


def discharge_pulse(state: CapacitorState, p: EnergyParams) -> tuple[CapacitorState, bool]:
    """Fire one LED pulse if the stored energy suffices.

    Returns the new state and whether a pulse was emitted. An insufficient
    charge leaves the state untouched.
    """
    if state.stored_j < p.pulse_energy_j * (1.0 - _ENERGY_EPS):
        return state, False
    stored = max(state.stored_j - p.pulse_energy_j, 0.0)
    v = math.sqrt(2.0 * stored / p.capacitance_f)
    return CapacitorState(v, stored, state.charge_cycles_elapsed, "discharging"), True


def charge_curve(p: EnergyParams, t_max_ms: float, n_points: int,
                 clamp: bool = True) -> list[tuple[float, int, float, float]]:
    """Charging trajectory rows of (t_ms, n_cycles, voltage_v, energy_j).

    Starts from an empty capacitor; the stored energy saturates at E_max
    when clamp is set, mirroring how the simulator charges devices.
    """
    rows = []
    v_cap = math.sqrt(2.0 * p.pulse_energy_j / p.capacitance_f)
    for i in range(n_points):
        t_ms = t_max_ms * i / (n_points - 1) if n_points > 1 else 0.0
        n = int(p.ultrasound_hz * t_ms * 1e-3)
        v = voltage_at_cycle(p, n, "charging")
        if clamp and v > v_cap:
            v = v_cap
        rows.append((t_ms, n, v, 0.5 * p.capacitance_f * v ** 2))
    return rows


def discharge_curve(p: EnergyParams, t_max_ms: float, n_points: int
                    ) -> list[tuple[float, int, float, float]]:
    """Discharging trajectory rows of (t_ms, n_cycles, voltage_v, energy_j),
    starting from V_g."""
    rows = []
    for i in range(n_points):
        t_ms = t_max_ms * i / (n_points - 1) if n_points > 1 else 0.0
        n = int(p.ultrasound_hz * t_ms * 1e-3)
        v = voltage_at_cycle(p, n, "discharging")
        rows.append((t_ms, n, v, 0.5 * p.capacitance_f * v ** 2))
    return rows
