"""Storage-capacitor behaviour under ultrasound charging.

Shows the three classic sensitivities: stimulation-intensity targets move
the full-charge level, harvester area changes the charging speed, and the
vibration frequency barely matters because charge per unit time is
frequency independent.
"""

import pathlib
from dataclasses import replace

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from wioptnd.energy import (EnergyParams, charge_curve, charge_per_cycle,
                            cycles_to_charge, discharge_curve,
                            generated_current, led_pulse_energy_j)
from wioptnd.photonics import OpticsParams

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

base = EnergyParams(ultrasound_hz=500.0)
print(f"harvest current {generated_current(base) * 1e6:.2f} uA, "
      f"charge packet {charge_per_cycle(base) * 1e9:.2f} nC per cycle, "
      f"{cycles_to_charge(base)} cycles to full")

fig, axes = plt.subplots(2, 2, figsize=(11, 7))

ax = axes[0, 0]
for target in (8.0, 10.0, 12.0):
    e_max = led_pulse_energy_j(OpticsParams(target_mw_mm2=target),
                               0.5, 1e-4, 1.0, 0.3)
    p = replace(base, pulse_energy_j=e_max)
    rows = charge_curve(p, 12.0, 241)
    ax.plot([r[0] for r in rows], [r[3] * 1e9 for r in rows],
            label=f"{target:g} mW/mm$^2$")
ax.set_title("Charging: stimulation-intensity variants")
ax.set_ylabel("stored energy [nJ]")
ax.legend()

ax = axes[0, 1]
for target in (8.0, 10.0, 12.0):
    e_max = led_pulse_energy_j(OpticsParams(target_mw_mm2=target),
                               0.5, 1e-4, 1.0, 0.3)
    p = replace(base, pulse_energy_j=e_max)
    rows = discharge_curve(p, 12.0, 241)
    ax.plot([r[0] for r in rows], [r[3] * 1e9 for r in rows],
            label=f"{target:g} mW/mm$^2$")
ax.set_title("Discharging from the generated voltage")
ax.legend()

ax = axes[1, 0]
for area in (1e-4, 2e-4):
    p = replace(base, harvester_cm2=area)
    rows = charge_curve(p, 12.0, 241)
    ax.plot([r[0] for r in rows], [r[3] * 1e9 for r in rows],
            label=f"{area * 1e8:.0f}e4 um$^2$")
ax.set_title("Charging: harvester-area variants")
ax.set_xlabel("time [ms]")
ax.set_ylabel("stored energy [nJ]")
ax.legend()

ax = axes[1, 1]
for freq, style in ((500.0, "-"), (3.0e6, "--")):
    p = replace(base, ultrasound_hz=freq)
    rows = charge_curve(p, 12.0, 241)
    label = f"{freq:g} Hz" if freq < 1e6 else f"{freq / 1e6:g} MHz"
    ax.plot([r[0] for r in rows], [r[3] * 1e9 for r in rows], style,
            label=label)
ax.set_title("Charging: vibration-frequency variants (curves overlap)")
ax.set_xlabel("time [ms]")
ax.legend()

for a in axes.flat:
    a.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "capacitor_curves.png", dpi=130)
print(f"wrote {OUT / 'capacitor_curves.png'}")
