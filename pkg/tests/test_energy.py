"""Energy-link and capacitor checks against independent evaluations."""

import math
from dataclasses import replace

import numpy as np
import pytest
from mpmath import mp, mpf, power

import wioptnd.energy as en
from wioptnd.energy import (CapacitorState, EnergyParams, charge_per_cycle,
                            cycles_to_charge, cycles_to_discharge,
                            discharge_pulse, empty_state, full_state,
                            generated_current, harvested_electrical_power,
                            intensity_at_depth, step_slot, validate_energy,
                            voltage_at_cycle)

mp.dps = 50


def oracle_attenuated(i_s, alpha, f_hz, d_cm) -> float:
    return float(mpf(i_s) * power(10, -(mpf(alpha) * mpf(f_hz) / mpf(10) ** 6
                                        * mpf(d_cm)) / 10))


# Parameters crafted so the charge packet is 1 nC against a 10 nF capacitor:
# negligible depth kills the attenuation term, f = 1 Hz makes dQ = P_e,
# and the areas are chosen to give P_e = 1e-9 W at V_g = 1 V.
def _unit_packet_params(**overrides) -> EnergyParams:
    base = dict(source_mw_cm2=720.0, atten_db_cm_mhz=0.435, ultrasound_hz=1.0,
                depth_cm=1e-9, harvester_cm2=1e-9 / (720e-3 * 0.5),
                conversion_eff=0.5, voltage_v=1.0, capacitance_f=10e-9,
                pulse_energy_j=2.5e-9)
    base.update(overrides)
    return EnergyParams(**base)


def test_intensity_at_depth_values():
    p3 = EnergyParams(ultrasound_hz=3e6)
    p1 = EnergyParams(ultrasound_hz=1e6)
    # independent oracle: 678.0044 at 3 MHz, 705.7201 at 1 MHz
    assert intensity_at_depth(p3) == pytest.approx(
        oracle_attenuated(720, 0.435, 3e6, 0.2), abs=1e-9)
    assert intensity_at_depth(p3) == pytest.approx(678.004, abs=0.1)
    assert intensity_at_depth(p1) == pytest.approx(705.720, abs=0.1)


def test_intensity_zero_frequency_passthrough():
    p = EnergyParams(ultrasound_hz=0.0)
    assert intensity_at_depth(p) == 720.0


def test_intensity_never_exceeds_source():
    for f in (500.0, 1e6, 3e6):
        assert intensity_at_depth(EnergyParams(ultrasound_hz=f)) <= 720.0


def test_harvested_power_identity_case():
    p = EnergyParams(ultrasound_hz=0.0, harvester_cm2=1.0, conversion_eff=1.0)
    assert harvested_electrical_power(p) == pytest.approx(0.72)


def test_harvested_power_small_harvester():
    # 720 mW/cm^2 * 1e-4 cm^2 * 0.5 = 36 uW with no attenuation
    p = EnergyParams(ultrasound_hz=0.0, harvester_cm2=1e-4, conversion_eff=0.5)
    assert harvested_electrical_power(p) * 1e6 == pytest.approx(36.0, abs=0.01)


def test_harvested_power_attenuated_chain():
    p = EnergyParams(ultrasound_hz=3e6, harvester_cm2=1e-4, conversion_eff=0.5)
    uw = harvested_electrical_power(p) * 1e6
    assert uw == pytest.approx(33.90, abs=0.05)
    assert uw == pytest.approx(
        oracle_attenuated(720, 0.435, 3e6, 0.2) * 1e-3 * 1e-4 * 0.5 * 1e6,
        rel=1e-12)


def test_generated_current():
    p = EnergyParams(ultrasound_hz=0.0, harvester_cm2=1e-4, conversion_eff=0.5,
                     voltage_v=1.0)
    assert generated_current(p) == pytest.approx(36e-6, rel=1e-12)
    zero = replace(p, conversion_eff=0.0)
    assert generated_current(zero) == 0.0
    with pytest.raises(ValueError):
        generated_current(replace(p, voltage_v=0.0))


def test_current_linear_in_area():
    p = EnergyParams(ultrasound_hz=3e6)
    doubled = replace(p, harvester_cm2=2 * p.harvester_cm2)
    assert generated_current(doubled) == pytest.approx(
        2 * generated_current(p), rel=1e-12)


def test_charge_per_cycle():
    p = EnergyParams(ultrasound_hz=500.0, harvester_cm2=1e-4,
                     conversion_eff=0.5, voltage_v=1.0)
    dq = charge_per_cycle(p)
    assert dq == generated_current(p) / 500.0
    assert dq == pytest.approx(72e-9, rel=1e-3)
    halved = replace(p, ultrasound_hz=1000.0)
    # i_g changes only through attenuation, negligible at these frequencies
    assert charge_per_cycle(halved) == pytest.approx(dq / 2, rel=1e-6)
    with pytest.raises(ValueError):
        charge_per_cycle(replace(p, ultrasound_hz=0.0))


def test_cycles_to_charge_reference():
    p = _unit_packet_params()   # dQ ~ 1 nC, C = 10 nF, E_max = 2.5 nJ
    assert charge_per_cycle(p) == pytest.approx(1e-9, rel=1e-6)
    # oracle: ceil(-10 * ln(1 - sqrt(0.5))) = ceil(12.2795) = 13
    assert cycles_to_charge(p) == 13
    # oracle: ceil(-10 * ln(sqrt(0.5))) = ceil(3.4657) = 4
    assert cycles_to_discharge(p) == 4


def test_cycles_single_cycle_constructions():
    # E_max just inside 0.5*C*V^2*(1-1/e)^2 makes the charge log term -1
    c, v = 1e-9, 1.0
    p = _unit_packet_params(capacitance_f=c, voltage_v=v,
                            pulse_energy_j=0.5 * c * v * v * (1 - 1 / math.e) ** 2
                            * (1 - 1e-6))
    assert cycles_to_charge(p) == 1
    # and E_max near 0.5*C*V^2*e^-2 makes the discharge log term -1
    p2 = _unit_packet_params(capacitance_f=c, voltage_v=v,
                             pulse_energy_j=0.5 * c * v * v * math.exp(-2)
                             * (1 + 1e-6))
    assert cycles_to_discharge(p2) == 1


def test_cycles_to_charge_small_energy_limit():
    p = _unit_packet_params(pulse_energy_j=1e-18)
    assert cycles_to_charge(p) == 1


def test_cycles_precondition():
    p = _unit_packet_params(pulse_energy_j=5.1e-9)  # 2*E_max > C*V^2
    with pytest.raises(ValueError, match="e_max"):
        cycles_to_charge(p)
    assert validate_energy(p) != []


def test_voltage_at_cycle_endpoints():
    p = _unit_packet_params()
    assert voltage_at_cycle(p, 0, "charging") == 0.0
    assert voltage_at_cycle(p, 0, "discharging") == p.voltage_v
    assert voltage_at_cycle(p, 13, "charging") == pytest.approx(0.7275, abs=1e-4)
    with pytest.raises(ValueError):
        voltage_at_cycle(p, -1, "charging")
    with pytest.raises(ValueError):
        voltage_at_cycle(p, 1, "floating")


def test_voltage_phases_sum_to_generated():
    p = _unit_packet_params()
    for n in (0, 1, 7, 100, 12345):
        total = (voltage_at_cycle(p, n, "charging")
                 + voltage_at_cycle(p, n, "discharging"))
        assert total == pytest.approx(p.voltage_v, rel=1e-12)


def test_charge_threshold_consistency_randomized():
    # 1000 random parameter sets: the ceil lands at the first cycle at or
    # above the E_max voltage level
    rng = np.random.default_rng(20240817)
    for _ in range(1000):
        v = float(rng.uniform(0.5, 5.0))
        c = float(10 ** rng.uniform(-9, -6))
        ratio = float(rng.uniform(0.05, 0.95))
        p = EnergyParams(
            source_mw_cm2=float(rng.uniform(10, 720)),
            atten_db_cm_mhz=float(rng.uniform(0.1, 1.0)),
            ultrasound_hz=float(10 ** rng.uniform(2.7, 6.5)),
            depth_cm=float(rng.uniform(0.05, 0.4)),
            harvester_cm2=float(10 ** rng.uniform(-5, -3)),
            conversion_eff=float(rng.uniform(0.1, 1.0)),
            voltage_v=v, capacitance_f=c,
            pulse_energy_j=0.5 * c * v * v * ratio * ratio)
        n = cycles_to_charge(p)
        v_threshold = math.sqrt(2 * p.pulse_energy_j / c)
        assert voltage_at_cycle(p, n, "charging") >= v_threshold * (1 - 1e-12)
        if n > 1:
            assert voltage_at_cycle(p, n - 1, "charging") < v_threshold


def test_step_slot_hold():
    p = EnergyParams()
    s = full_state(p)
    assert step_slot(s, p, False, 1.0) == s


def test_step_slot_matches_closed_form():
    p = EnergyParams(capacitance_f=1e-7, pulse_energy_j=4.4e-8)
    s = empty_state(p)
    s = step_slot(s, p, True, 1.0)   # 3 MHz * 1 ms = 3000 cycles
    assert s.charge_cycles_elapsed == 3000
    assert s.voltage_v == pytest.approx(voltage_at_cycle(p, 3000, "charging"),
                                        rel=1e-12)
    for _ in range(3):
        s = step_slot(s, p, True, 1.0)
    assert s.voltage_v == pytest.approx(voltage_at_cycle(p, 12000, "charging"),
                                        rel=1e-9)


def test_step_slot_converges_and_clamps():
    p = EnergyParams()
    s = empty_state(p)
    prev = -1.0
    for _ in range(50):
        s = step_slot(s, p, True, 1.0)
        assert s.stored_j >= prev - 1e-18
        assert s.stored_j <= p.pulse_energy_j * (1 + 1e-12)
        prev = s.stored_j
    assert s.stored_j == pytest.approx(p.pulse_energy_j, rel=1e-9)


def test_fractional_cycle_rounding():
    p = EnergyParams(ultrasound_hz=500.0)
    # 0.5 cycles per 1 ms slot rounds up to one whole charge packet
    assert en.cycles_per_slot(p, 1.0) == 1
    assert en.cycles_per_slot(p, 4.0) == 2
    assert en.cycles_per_slot(EnergyParams(ultrasound_hz=3e6), 1.0) == 3000


def test_discharge_pulse():
    p = EnergyParams()
    s, fired = discharge_pulse(full_state(p), p)
    assert fired and s.stored_j == pytest.approx(0.0, abs=1e-20)
    half = CapacitorState(voltage_v=math.sqrt(p.pulse_energy_j / p.capacitance_f),
                          stored_j=0.5 * p.pulse_energy_j)
    s2, fired2 = discharge_pulse(half, p)
    assert not fired2 and s2 == half


def test_charge_fire_fire_sequence():
    p = EnergyParams()
    s = empty_state(p)
    for _ in range(20):
        s = step_slot(s, p, True, 1.0)
    s, first = discharge_pulse(s, p)
    s, second = discharge_pulse(s, p)
    assert first is True and second is False


def test_frequency_independence_of_energy_vs_time():
    # fixed electrical power: negligible depth removes the frequency-dependent
    # attenuation, so P_e is equal for both frequencies
    slow = EnergyParams(ultrasound_hz=500.0, depth_cm=1e-9)
    fast = EnergyParams(ultrasound_hz=3e6, depth_cm=1e-9)
    c = slow.capacitance_f
    for t_ms in np.arange(20.0, 200.0, 1.0):   # >= 10 cycles of the 500 Hz source
        e = []
        for p in (slow, fast):
            n = math.floor(p.ultrasound_hz * t_ms * 1e-3)
            v = voltage_at_cycle(p, n, "charging")
            e.append(0.5 * c * v * v)
        assert abs(e[0] - e[1]) / max(e) <= 0.02


def test_area_linearity():
    p = EnergyParams(ultrasound_hz=3e6)
    doubled = replace(p, harvester_cm2=2 * p.harvester_cm2)
    assert charge_per_cycle(doubled) == pytest.approx(2 * charge_per_cycle(p),
                                                      rel=1e-12)
    assert cycles_to_charge(doubled) < cycles_to_charge(p)


def test_fda_cap_validation():
    bad = EnergyParams(source_mw_cm2=800.0)
    violations = validate_energy(bad)
    assert any("720" in v.message for v in violations)
    assert all(v.kind == "physics" for v in violations)
    assert validate_energy(EnergyParams()) == []


def test_led_pulse_energy_derivation():
    from wioptnd.photonics import OpticsParams, required_source_intensity
    optics = OpticsParams()
    e = en.led_pulse_energy_j(optics, 0.5, 1e-4, 1.0, 0.3)
    expected = required_source_intensity(optics, 0.5) * 1e-4 * 1.0 * 1e-6 / 0.3
    assert e == pytest.approx(expected, rel=1e-12)
    assert en.DEFAULT_PULSE_ENERGY_J == pytest.approx(3.4314e-9, rel=1e-4)
