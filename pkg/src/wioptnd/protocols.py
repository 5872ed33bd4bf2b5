"""Charging protocols: per-slot decision policies and pattern-bank builders.

Three policies are supported. Charge-and-fire addresses one device per
frequency and serves the lowest-indexed spiking device each slot. The
sliding-window policies (random and layer-sequence banks) emit the
frequency whose time-delay pattern covers the most not-yet-served spikes
in the detection window, then schedule per-device delayed discharges.

Tie-breaks are everywhere "lowest index wins" so traces are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import LAYER_ORDER, Layer, RasterPlot


@dataclass(frozen=True)
class Pattern:
    """Per-device discharge delay offsets (slots) for one frequency."""

    delays: tuple[int, ...]      # index = device id, value in [0, window)
    window: int

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if any(not 0 <= d < self.window for d in self.delays):
            raise ValueError("delays must lie in [0, window)")


@dataclass(frozen=True)
class PatternBank:
    """Patterns indexed by frequency id; all share one window width."""

    patterns: tuple[Pattern, ...]

    def __post_init__(self):
        if not self.patterns:
            raise ValueError("bank needs at least one pattern")
        windows = {p.window for p in self.patterns}
        if len(windows) != 1:
            raise ValueError("all patterns must share the same window width")
        counts = {len(p.delays) for p in self.patterns}
        if len(counts) != 1:
            raise ValueError("all patterns must cover the same devices")

    @property
    def window(self) -> int:
        return self.patterns[0].window

    @property
    def device_count(self) -> int:
        return len(self.patterns[0].delays)

    @property
    def frequency_count(self) -> int:
        return len(self.patterns)


@dataclass(frozen=True)
class ProtocolDecision:
    """Outcome of one protocol step; at most one frequency per slot."""

    emit: int | None = None                                  # frequency id
    immediate_discharges: frozenset[int] = frozenset()       # charge-and-fire
    scheduled_discharges: dict[int, int] = field(default_factory=dict)

    @property
    def idle(self) -> bool:
        return self.emit is None


IDLE = ProtocolDecision()


def charge_and_fire_step(raster: RasterPlot, t: int) -> ProtocolDecision:
    """Serve the lowest-indexed device spiking at slot t; other same-slot
    spikes are left unserved because only one frequency fits in a slot."""
    if not 0 <= t < raster.n_slots:
        raise ValueError(f"slot {t} outside the raster")
    spiking = np.flatnonzero(raster.spikes[:, t])
    if spiking.size == 0:
        return IDLE
    device = int(spiking[0])
    return ProtocolDecision(emit=device, immediate_discharges=frozenset((device,)))


def match_score(pattern: Pattern, raster: RasterPlot, t0: int) -> int:
    """Number of spikes the pattern would cover if emitted at slot t0.

    Windows that overhang the raster end are truncated: delays landing
    past the last slot simply cannot match.
    """
    spikes = raster.spikes
    n_slots = spikes.shape[1]
    score = 0
    for d, delay in enumerate(pattern.delays):
        s = t0 + delay
        if s < n_slots and spikes[d, s]:
            score += 1
    return score


def psdw_step(remaining: RasterPlot, t: int, bank: PatternBank
              ) -> tuple[ProtocolDecision, RasterPlot]:
    """One sliding-detection-window step over the not-yet-served raster.

    If no device spikes at slot t the step is idle and the raster is
    returned unchanged. Otherwise the highest-scoring pattern is emitted
    (ties to the lowest frequency id), every device gets a discharge
    scheduled at t + its delay, and the spikes that the chosen pattern
    covers are removed from the remaining raster.
    """
    spikes = remaining.spikes
    if not 0 <= t < remaining.n_slots:
        raise ValueError(f"slot {t} outside the raster")
    if bank.device_count != remaining.device_count:
        raise ConfigError("pattern bank and raster disagree on device count")
    if not spikes[:, t].any():
        return IDLE, remaining
    best_freq = 0
    best_score = -1
    for f, pattern in enumerate(bank.patterns):
        score = match_score(pattern, remaining, t)
        if score > best_score:
            best_freq, best_score = f, score
    chosen = bank.patterns[best_freq]
    new_spikes = spikes.copy()
    schedule: dict[int, int] = {}
    for d, delay in enumerate(chosen.delays):
        s = t + delay
        if s < remaining.n_slots:
            schedule[d] = s
            new_spikes[d, s] = 0
    decision = ProtocolDecision(emit=best_freq, scheduled_discharges=schedule)
    return decision, RasterPlot(new_spikes, remaining.slot_ms)


# --------------------------------------------------------------------------
# Pattern-bank construction.
# --------------------------------------------------------------------------

def random_pattern_bank(n_freq: int, window: int, device_count: int,
                        seed: int) -> PatternBank:
    """Each pattern draws an independent uniform delay in [0, window) per device."""
    if n_freq < 1 or window < 1 or device_count < 1:
        raise ValueError("n_freq, window and device_count must be >= 1")
    rng = np.random.default_rng(seed)
    patterns = []
    for _ in range(n_freq):
        delays = tuple(int(x) for x in rng.integers(0, window, size=device_count))
        patterns.append(Pattern(delays, window))
    return PatternBank(tuple(patterns))


@dataclass(frozen=True)
class TransitionMatrix:
    """Directed connection weights between the four layers.

    Entries need not form normalized rows; the distribution helpers
    normalize by the total mass where required.
    """

    pr: np.ndarray   # shape (4, 4), row = source layer, column = target

    def __post_init__(self):
        m = np.asarray(self.pr, dtype=float)
        object.__setattr__(self, "pr", m)
        if m.shape != (len(LAYER_ORDER), len(LAYER_ORDER)):
            raise ValueError(f"matrix must be {len(LAYER_ORDER)}x{len(LAYER_ORDER)}")
        if np.any((m < 0) | (m > 1)):
            raise ValueError("entries must lie in [0, 1]")
        if np.any(np.diagonal(m) != 0):
            raise ValueError("self-transitions must be zero")

    def weight(self, src: Layer, dst: Layer) -> float:
        return float(self.pr[src.index, dst.index])

    @classmethod
    def from_layer_dict(cls, weights: dict[tuple[str, str], float]) -> "TransitionMatrix":
        m = np.zeros((len(LAYER_ORDER), len(LAYER_ORDER)))
        for (src, dst), w in weights.items():
            m[Layer.from_name(src).index, Layer.from_name(dst).index] = w
        return cls(m)


# Measured connection-flow weights between cortical layers
# (row = presynaptic layer, column = postsynaptic layer).
CORTICAL_FLOW_WEIGHTS = TransitionMatrix(np.array([
    #  L2/3    L4     L5     L6
    [0.000, 0.200, 0.270, 0.055],   # from L2/3
    [0.250, 0.000, 0.325, 0.095],   # from L4
    [0.175, 0.150, 0.000, 0.325],   # from L5
    [0.055, 0.200, 0.225, 0.000],   # from L6
]))


@dataclass(frozen=True)
class LayerDistribution:
    """Connection-mass distribution per layer, split by role."""

    pre: dict[Layer, float]        # share of connections entering the layer
    post: dict[Layer, float]       # share of connections leaving the layer
    combined: dict[Layer, float]   # mean of the two roles


def connection_distribution(m: TransitionMatrix) -> LayerDistribution:
    """Per-layer connection probability from the (unnormalized) flow matrix.

    Both role distributions are normalized by the total mass, so each sums
    to 1 across layers; the combined value averages the two roles.
    """
    total = float(m.pr.sum())
    if total <= 0:
        raise ValueError("transition matrix has no mass")
    post = {ly: float(m.pr[ly.index].sum()) / total for ly in LAYER_ORDER}
    pre = {ly: float(m.pr[:, ly.index].sum()) / total for ly in LAYER_ORDER}
    combined = {ly: (pre[ly] + post[ly]) / 2.0 for ly in LAYER_ORDER}
    return LayerDistribution(pre, post, combined)


@dataclass(frozen=True)
class LayerSequence:
    """One firing-order hypothesis across the four layers."""

    order: tuple[Layer, ...]
    chain_score: float

    def label(self) -> str:
        return "->".join(l.value for l in self.order)


def rank_layer_sequences(m: TransitionMatrix) -> list[LayerSequence]:
    """All 24 layer permutations ranked by chain probability.

    The chain score is the product of the transition weights along
    consecutive pairs. Sorting is by descending score with lexicographic
    layer order as the tie-break, so the ranking is deterministic.
    """
    scored = []
    for perm in itertools.permutations(LAYER_ORDER):
        score = 1.0
        for a, b in zip(perm, perm[1:]):
            score *= m.weight(a, b)
        scored.append(LayerSequence(perm, score))
    scored.sort(key=lambda s: (-s.chain_score, tuple(l.index for l in s.order)))
    return scored


def build_markov_bank(ranked: list[LayerSequence], n_freq: int,
                      layer_map: tuple[Layer, ...], window: int) -> PatternBank:
    """Map the top n_freq ranked sequences to per-layer delay patterns.

    In the pattern for sequence k, every device living in the layer at
    position p discharges p slots after the emission, so devices sharing a
    layer always share a delay.
    """
    n_perms = math.factorial(len(LAYER_ORDER))
    if n_freq > min(len(ranked), n_perms):
        raise ConfigError(
            f"at most {n_perms} layer-sequence patterns exist; requested {n_freq}")
    if window < len(LAYER_ORDER):
        raise ConfigError(
            f"layer-sequence patterns need window >= {len(LAYER_ORDER)}")
    patterns = []
    for seq in ranked[:n_freq]:
        position = {layer: p for p, layer in enumerate(seq.order)}
        delays = tuple(position[layer] for layer in layer_map)
        patterns.append(Pattern(delays, window))
    return PatternBank(tuple(patterns))


# --------------------------------------------------------------------------
# Serialization.
# --------------------------------------------------------------------------

def bank_to_json(bank: PatternBank, layer_map: tuple[Layer, ...] | None = None
                 ) -> dict:
    """Serialize frequency -> {device or layer -> delay}.

    When a layer map is given and every pattern is constant within each
    layer, the compact per-layer form is written instead of per-device.
    """
    per_layer = layer_map is not None
    if layer_map is not None:
        for pattern in bank.patterns:
            by_layer: dict[Layer, int] = {}
            for d, delay in enumerate(pattern.delays):
                if by_layer.setdefault(layer_map[d], delay) != delay:
                    per_layer = False
                    break
            if not per_layer:
                break
    entries = []
    for f, pattern in enumerate(bank.patterns):
        if per_layer:
            delays = {}
            for d, delay in enumerate(pattern.delays):
                delays[layer_map[d].value] = delay
        else:
            delays = {str(d): delay for d, delay in enumerate(pattern.delays)}
        entries.append({"frequency": f, "delays": delays})
    return {"window_width": bank.window, "keyed_by": "layer" if per_layer else "device",
            "patterns": entries}


def bank_from_json(data: dict, layer_map: tuple[Layer, ...] | None = None
                   ) -> PatternBank:
    try:
        window = int(data["window_width"])
        keyed_by = data.get("keyed_by", "device")
        entries = sorted(data["patterns"], key=lambda e: int(e["frequency"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed pattern-bank JSON: {exc}") from exc
    patterns = []
    for entry in entries:
        delays_in = entry["delays"]
        if keyed_by == "layer":
            if layer_map is None:
                raise ConfigError("layer-keyed bank needs a device layer map")
            by_layer = {Layer.from_name(k): int(v) for k, v in delays_in.items()}
            missing = set(layer_map) - set(by_layer)
            if missing:
                raise ConfigError(
                    f"bank lacks delays for layers {sorted(l.value for l in missing)}")
            delays = tuple(by_layer[layer] for layer in layer_map)
        else:
            delays = tuple(int(delays_in[str(d)]) for d in range(len(delays_in)))
        patterns.append(Pattern(delays, window))
    return PatternBank(tuple(patterns))


def rank_table_csv(ranked: list[LayerSequence]) -> str:
    """CSV rows of (rank, sequence, chain_score) for the full ranking."""
    lines = ["rank,sequence,chain_score"]
    for i, seq in enumerate(ranked, start=1):
        lines.append(f"{i},{seq.label()},{seq.chain_score!r}")
    return "\n".join(lines) + "\n"
