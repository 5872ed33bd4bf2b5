"""Spike-train generation: homogeneous rasters, the stimulus-driven
threshold predictor, and a stimulus-direction switch.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wioptnd.spikegen import (KeatParams, SpikeRateProfile, biphasic_filter,
                              direction_switch_scenario,
                              generate_poisson_raster, keat_spikes)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def raster_axes(ax, raster, title):
    for d in range(raster.device_count):
        slots = raster.spike_slots(d)
        ax.vlines(slots, d + 0.55, d + 1.45, lw=0.6)
    ax.set_ylim(0.5, raster.device_count + 0.5)
    ax.set_ylabel("device")
    ax.set_title(title)


fig, axes = plt.subplots(3, 1, figsize=(10, 8), sharex=False)

homog = generate_poisson_raster(SpikeRateProfile.constant(100.0, 6, 2.0),
                                2.0, 1.0, seed=7)
print(f"homogeneous raster: {homog.total_spikes} spikes over "
      f"{homog.n_slots} slots ({homog.total_spikes / 6 / 2.0:.1f} Hz/device)")
raster_axes(axes[0], homog, "Homogeneous 100 Hz raster (6 devices, 2 s)")

switch = direction_switch_scenario(100.0, 130.0, switch_s=1.0, duration_s=2.0,
                                   device_count=6, slot_ms=1.0, seed=7)
pre = int(switch.spikes[:, :1000].sum())
post = int(switch.spikes[:, 1000:].sum())
print(f"direction switch at 1 s: {pre} spikes before, {post} after")
raster_axes(axes[1], switch, "Stimulus-direction switch: 100 Hz -> 130 Hz at 1 s")
axes[1].axvline(1000, color="r", ls="--", lw=1)

# threshold model driven by a drifting-grating-like stimulus
t = np.arange(2000)
stimulus = 1.2 * (np.sin(t / 25.0) > 0.2)
params = KeatParams(theta=1.0, filter_f=biphasic_filter(),
                    noise_a_sigma=0.15, noise_b_sigma=0.1)
spikes, h = keat_spikes(stimulus, params, seed=11)
print(f"threshold model fired {int(spikes.sum())} spikes from the stimulus")
axes[2].plot(t, h, lw=0.6, label="potential h(t)")
axes[2].axhline(params.theta, color="k", ls=":", lw=1, label="threshold")
for s in np.flatnonzero(spikes):
    axes[2].axvline(s, color="r", alpha=0.25, lw=0.5)
axes[2].set_xlabel("slot [ms]")
axes[2].set_title("Stimulus-driven threshold model (spikes in red)")
axes[2].legend(loc="upper right")

fig.tight_layout()
fig.savefig(OUT / "spike_rasters.png", dpi=130)
print(f"wrote {OUT / 'spike_rasters.png'}")
