"""How much light must the implant LED emit?

Walks the tissue photonics chain: the differential pathlength factor grows
with distance and saturates, transmittance falls off, and the required
source intensity rises correspondingly for targets needing 8-12 mW/mm^2.

Writes a CSV table and a two-panel figure into demos/output/.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wioptnd.photonics import (OpticsParams, dpf, required_source_intensity,
                               transmittance)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

params = OpticsParams()   # grey matter: mu_a 0.07/mm, mu_s' 1.404/mm
d = np.linspace(0.0, 3.0, 301)

print("distance -> pathlength factor, transmittance, required source level")
print(f"{'d [mm]':>8} {'DPF':>8} {'T(d)':>8} {'I_src [mW/mm^2]':>16}")
for di in (0.0, 0.25, 0.5, 1.0, 2.0, 3.0):
    print(f"{di:8.2f} {dpf(params, di):8.4f} {transmittance(params, di):8.4f}"
          f" {required_source_intensity(params, di):16.3f}")

sup = 0.5 * np.sqrt(3 * params.mu_s_prime_mm / params.mu_a_mm)
print(f"\nDPF saturates at {sup:.4f}; at 3 mm it reaches {dpf(params, 3.0):.4f}")

with open(OUT / "light_budget.csv", "w", encoding="utf-8") as fh:
    fh.write("d_mm,dpf,transmittance,required_source_mw_mm2\n")
    for di in d:
        fh.write(f"{di!r},{dpf(params, float(di))!r},"
                 f"{transmittance(params, float(di))!r},"
                 f"{required_source_intensity(params, float(di))!r}\n")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(d, transmittance(params, d))
ax1.set_xlabel("distance from source [mm]")
ax1.set_ylabel("intensity ratio T(d)")
ax1.set_title("Transmittance through grey matter")
ax1.grid(alpha=0.3)

for target in (8.0, 10.0, 12.0):
    p = OpticsParams(target_mw_mm2=target)
    ax2.plot(d, required_source_intensity(p, d), label=f"target {target:g}")
ax2.set_xlabel("distance from source [mm]")
ax2.set_ylabel("required source intensity [mW/mm$^2$]")
ax2.set_title("Source level vs distance")
ax2.legend(title="neuron needs [mW/mm$^2$]")
ax2.grid(alpha=0.3)

fig.tight_layout()
fig.savefig(OUT / "light_budget.png", dpi=130)
print(f"\nwrote {OUT / 'light_budget.csv'} and {OUT / 'light_budget.png'}")
