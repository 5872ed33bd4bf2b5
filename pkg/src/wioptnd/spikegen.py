"""Spike-train generation: Poisson rasters, a stimulus-driven threshold
predictor, and the direction-switch scenario.

Poisson trains are generated by time rescaling: per device, unit-mean
exponential increments are accumulated in integrated-intensity space and
mapped back to wall-clock time through the (piecewise-constant) rate. A
constant-rate profile therefore consumes the RNG stream identically to a
degenerate piecewise profile with equal rates, which keeps seeded runs
bit-reproducible across the two entry points.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import RasterPlot, slots_for_duration

_MIX_MULT = 0x9E3779B97F4A7C15  # splitmix64 increment / golden-gamma constant
_MASK64 = (1 << 64) - 1


def split_seed(base_seed: int, index: int) -> int:
    """Derive an independent 64-bit stream seed: splitmix64(base XOR index)."""
    z = ((base_seed ^ index) + _MIX_MULT) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RateSegment:
    start_s: float
    end_s: float
    rate_hz: float


@dataclass(frozen=True)
class SpikeRateProfile:
    """Per-device firing rate, piecewise constant over time segments."""

    segments: tuple[tuple[RateSegment, ...], ...]

    @classmethod
    def constant(cls, rate_hz: float, device_count: int, duration_s: float
                 ) -> "SpikeRateProfile":
        seg = (RateSegment(0.0, duration_s, rate_hz),)
        return cls(tuple(seg for _ in range(device_count)))

    @classmethod
    def step(cls, rate_before_hz: float, rate_after_hz: float, switch_s: float,
             duration_s: float, device_count: int) -> "SpikeRateProfile":
        if not 0.0 <= switch_s <= duration_s:
            raise ValueError("switch time must lie within [0, duration]")
        segs = []
        if switch_s > 0.0:
            segs.append(RateSegment(0.0, switch_s, rate_before_hz))
        if switch_s < duration_s:
            segs.append(RateSegment(switch_s, duration_s, rate_after_hz))
        seg = tuple(segs)
        return cls(tuple(seg for _ in range(device_count)))

    def validate(self, duration_s: float) -> None:
        for d, segs in enumerate(self.segments):
            cursor = 0.0
            for seg in segs:
                if seg.rate_hz < 0:
                    raise ValueError(f"device {d}: negative rate")
                if abs(seg.start_s - cursor) > 1e-12:
                    raise ValueError(f"device {d}: segments must tile [0, duration]")
                cursor = seg.end_s
            if abs(cursor - duration_s) > 1e-12:
                raise ValueError(f"device {d}: segments must cover the full duration")


def _device_spike_times(rng: np.random.Generator,
                        segments: tuple[RateSegment, ...]) -> list[float]:
    times = []
    seg_idx = 0
    t = 0.0
    need = rng.standard_exponential()  # unit-mean integrated-intensity gap
    while seg_idx < len(segments):
        seg = segments[seg_idx]
        if seg.rate_hz <= 0.0:
            seg_idx += 1
            t = seg.end_s
            continue
        available = (seg.end_s - t) * seg.rate_hz
        if need <= available:
            t += need / seg.rate_hz
            times.append(t)
            need = rng.standard_exponential()
        else:
            need -= available
            seg_idx += 1
            t = seg.end_s
    return times


def generate_poisson_raster(profile: SpikeRateProfile, duration_s: float,
                            slot_ms: float, seed: int) -> RasterPlot:
    """Exponential inter-spike intervals quantized to slots, one spike cap per slot."""
    profile.validate(duration_s)
    n_slots = slots_for_duration(duration_s, slot_ms)
    rng = np.random.default_rng(seed)
    spikes = np.zeros((len(profile.segments), n_slots), dtype=np.uint8)
    slot_s = slot_ms * 1e-3
    for d, segs in enumerate(profile.segments):
        for t in _device_spike_times(rng, segs):
            slot = int(t / slot_s)
            if slot < n_slots:
                spikes[d, slot] = 1
    return RasterPlot(spikes, slot_ms)


def direction_switch_scenario(rate_before_hz: float, rate_after_hz: float,
                              switch_s: float, duration_s: float,
                              device_count: int, slot_ms: float,
                              seed: int) -> RasterPlot:
    """Raster whose rate steps at switch_s, emulating a stimulus-direction change."""
    profile = SpikeRateProfile.step(rate_before_hz, rate_after_hz, switch_s,
                                    duration_s, device_count)
    return generate_poisson_raster(profile, duration_s, slot_ms, seed)


# --------------------------------------------------------------------------
# Stimulus-driven spike prediction (threshold-crossing neuron model).
# --------------------------------------------------------------------------

def biphasic_filter(n_taps: int = 30, rise_slots: float = 3.0,
                    decay_slots: float = 9.0, undershoot: float = 0.6
                    ) -> np.ndarray:
    """Default stimulus filter: positive lobe followed by a negative lobe.

    Difference of two gamma-shaped kernels, peak normalized to 1.
    """
    k = np.arange(n_taps, dtype=float)
    fast = (k / rise_slots) * np.exp(1.0 - k / rise_slots)
    slow = (k / decay_slots) * np.exp(1.0 - k / decay_slots)
    taps = fast - undershoot * slow
    return taps / np.max(np.abs(taps))


def afterpotential(n_taps: int = 20, depth: float = 2.0,
                   decay_slots: float = 4.0) -> np.ndarray:
    """Default feedback kernel: negative exponential, refractory behaviour.

    Tap i applies i+1 slots after a spike (the spiking slot itself never
    feeds back into its own potential).
    """
    k = np.arange(1, n_taps + 1, dtype=float)
    return -depth * np.exp(-(k - 1) / decay_slots)


@dataclass(frozen=True)
class KeatParams:
    """Threshold, filters and noise levels for the spike predictor."""

    theta: float = 1.0
    filter_f: np.ndarray | None = None     # stimulus FIR, tap spacing = slot
    feedback_p: np.ndarray | None = None   # afterpotential FIR, lag i+1 slots
    noise_a_sigma: float = 0.0             # additive Gaussian, drawn per slot
    noise_b_sigma: float = 0.0             # multiplicative Gaussian, per spike

    def resolved(self) -> tuple[np.ndarray, np.ndarray]:
        f = self.filter_f if self.filter_f is not None else biphasic_filter()
        p = self.feedback_p if self.feedback_p is not None else afterpotential()
        f = np.asarray(f, dtype=float)
        p = np.asarray(p, dtype=float)
        if f.size < 1:
            raise ValueError("stimulus filter needs at least one tap")
        if self.noise_a_sigma < 0 or self.noise_b_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        return f, p


def keat_filter_response(stimulus: np.ndarray, filter_f: np.ndarray,
                         slot_ms: float = 1.0) -> np.ndarray:
    """Causal convolution of the stimulus with the FIR filter, scaled by the
    slot duration (ms)."""
    s = np.asarray(stimulus, dtype=float)
    f = np.asarray(filter_f, dtype=float)
    return np.convolve(s, f)[: s.size] * slot_ms


def keat_spikes(stimulus: np.ndarray, params: KeatParams, slot_ms: float = 1.0,
                seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Run the threshold-crossing model over one stimulus trace.

    Returns (spike row, potential trace h). A spike is emitted at slot t
    when h rises through theta: h[t] > theta and h[t-1] <= theta, with the
    pre-stimulus potential taken as 0. With both noise sigmas at zero the
    seed is never consumed.
    """
    s = np.asarray(stimulus, dtype=float)
    f, p = params.resolved()
    n = s.size
    g = keat_filter_response(s, f, slot_ms)
    h = np.zeros(n)
    feedback = np.zeros(n)
    spikes = np.zeros(n, dtype=np.uint8)
    noisy = params.noise_a_sigma > 0 or params.noise_b_sigma > 0
    rng = np.random.default_rng(seed) if noisy else None
    a = (rng.normal(0.0, params.noise_a_sigma, n)
         if params.noise_a_sigma > 0 else np.zeros(n))
    prev = 0.0
    for t in range(n):
        h[t] = g[t] + a[t] + feedback[t]
        if h[t] > params.theta and prev <= params.theta:
            spikes[t] = 1
            b = rng.normal(0.0, params.noise_b_sigma) if params.noise_b_sigma > 0 else 0.0
            hi = min(n, t + 1 + p.size)
            feedback[t + 1: hi] += (1.0 + b) * p[: hi - t - 1]
        prev = h[t]
    return spikes, h


# --------------------------------------------------------------------------
# Raster import/export.
# --------------------------------------------------------------------------

def raster_to_csv(r: RasterPlot) -> str:
    """Sparse CSV with (device_id, slot_index) rows; metadata in # comments."""
    buf = io.StringIO()
    buf.write(f"# device_count={r.device_count} n_slots={r.n_slots} "
              f"slot_ms={r.slot_ms!r}\n")
    buf.write("device_id,slot_index\n")
    devices, slots = np.nonzero(r.spikes)
    for d, s in zip(devices, slots):
        buf.write(f"{d},{s}\n")
    return buf.getvalue()


def raster_from_csv(text: str) -> RasterPlot:
    meta = {}
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    k, _, v = token.partition("=")
                    meta[k] = v
            continue
        if line == "device_id,slot_index":
            continue
        d, _, s = line.partition(",")
        rows.append((int(d), int(s)))
    try:
        device_count = int(meta["device_count"])
        n_slots = int(meta["n_slots"])
        slot_ms = float(meta["slot_ms"])
    except KeyError as exc:
        raise ConfigError(f"raster CSV is missing metadata field {exc}") from exc
    spikes = np.zeros((device_count, n_slots), dtype=np.uint8)
    for d, s in rows:
        if not (0 <= d < device_count and 0 <= s < n_slots):
            raise ConfigError(f"raster CSV spike ({d}, {s}) outside the declared shape")
        spikes[d, s] = 1
    return RasterPlot(spikes, slot_ms)


def raster_to_json(r: RasterPlot) -> dict:
    """Dense JSON form, intended for small rasters."""
    return {
        "slot_ms": r.slot_ms,
        "device_count": r.device_count,
        "n_slots": r.n_slots,
        "spikes": r.spikes.tolist(),
    }


def raster_from_json(data: dict) -> RasterPlot:
    spikes = np.asarray(data["spikes"], dtype=np.uint8)
    r = RasterPlot(spikes, float(data["slot_ms"]))
    if r.device_count != data.get("device_count", r.device_count) or \
            r.n_slots != data.get("n_slots", r.n_slots):
        raise ConfigError("raster JSON shape fields disagree with the matrix")
    return r
