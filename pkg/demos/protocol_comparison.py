"""Compare the three charging protocols over the spike-rate sweep.

Reproduces the shape of the headline comparison: the sliding-window
protocols need far fewer ultrasound emissions per spike (lower stimulation
ratio), and the layer-sequence bank tracks the random bank's ratio while
being much more stable in efficiency across replicates.

Smaller than the acceptance sweep (3 replicates, 5 s rasters) so it runs
in a few seconds; bump REPLICATES/DURATION for smoother curves.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wioptnd.engine import run
from wioptnd.metrics import compute_metrics
from wioptnd.model import SimConfig
from wioptnd.protocols import (CORTICAL_FLOW_WEIGHTS, build_markov_bank,
                               random_pattern_bank, rank_layer_sequences)
from wioptnd.spikegen import SpikeRateProfile, generate_poisson_raster, \
    split_seed

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

RATES = list(range(100, 131, 5))
REPLICATES = 3
DURATION = 5.0
DEVICES = 4
N_PATTERNS = 10

ranked = rank_layer_sequences(CORTICAL_FLOW_WEIGHTS)
layer_map = SimConfig(device_count=DEVICES).device_layers
markov_bank = build_markov_bank(ranked, N_PATTERNS, layer_map, 4)
print("top-ranked layer sequences feeding the pattern bank:")
for i, seq in enumerate(ranked[:5], start=1):
    print(f"  {i}. {seq.label()}  (chain score {seq.chain_score:.5f})")

stats = {}
for vi, proto in enumerate(("charge_and_fire", "psdw_random", "psdw_markov")):
    per_rate = []
    for xi, rate in enumerate(RATES):
        gammas, etas = [], []
        for rep in range(REPLICATES):
            seed = split_seed(7, (xi << 20) | rep)
            raster = generate_poisson_raster(
                SpikeRateProfile.constant(rate, DEVICES, DURATION),
                DURATION, 1.0, seed)
            if proto == "charge_and_fire":
                cfg = SimConfig(device_count=DEVICES, frequency_count=DEVICES,
                                protocol=proto, duration_s=DURATION, seed=seed)
                bank = None
            else:
                cfg = SimConfig(device_count=DEVICES,
                                frequency_count=N_PATTERNS, protocol=proto,
                                window_width=4, duration_s=DURATION, seed=seed)
                bank = markov_bank if proto == "psdw_markov" else \
                    random_pattern_bank(N_PATTERNS, 4, DEVICES,
                                        split_seed(7, (1 << 40) | (vi << 20) | rep))
            m = compute_metrics(run(cfg, raster, bank))
            gammas.append(m.gamma_stim)
            etas.append(m.eta_stim_pct)
        per_rate.append((np.mean(gammas), np.std(gammas, ddof=1),
                         np.mean(etas), np.std(etas, ddof=1)))
    stats[proto] = per_rate

print(f"\n{'rate':>6} | " + " | ".join(f"{p:>24}" for p in stats))
for i, rate in enumerate(RATES):
    cells = [f"g={stats[p][i][0]:.3f} eta={stats[p][i][2]:5.1f}%"
             for p in stats]
    print(f"{rate:>6} | " + " | ".join(f"{c:>24}" for c in cells))

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
labels = {"charge_and_fire": "one frequency per device",
          "psdw_random": "sliding window, random bank",
          "psdw_markov": "sliding window, layer-sequence bank"}
for proto, series in stats.items():
    ax1.errorbar(RATES, [s[0] for s in series], yerr=[s[1] for s in series],
                 marker="o", capsize=3, label=labels[proto])
    ax2.errorbar(RATES, [s[2] for s in series], yerr=[s[3] for s in series],
                 marker="o", capsize=3, label=labels[proto])
ax1.set_xlabel("spike rate [Hz]")
ax1.set_ylabel(r"stimulation ratio $\gamma_{stim}$")
ax1.set_title("Emissions per spike")
ax2.set_xlabel("spike rate [Hz]")
ax2.set_ylabel(r"stimulation efficiency $\eta_{stim}$ [%]")
ax2.set_title("Spikes served on time")
for ax in (ax1, ax2):
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "protocol_comparison.png", dpi=130)
print(f"\nwrote {OUT / 'protocol_comparison.png'}")
