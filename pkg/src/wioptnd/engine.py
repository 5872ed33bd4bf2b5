"""Slot-by-slot executor: protocol decisions, charging, delayed discharges
and the per-slot event trace.

Per slot the engine (1) asks the active protocol for a decision, (2)
applies charging for the emission, (3) registers immediate or delayed
discharges, (4) fires every discharge due this slot through the capacitor
model, and (5) classifies outcomes against the original raster:

* a successful pulse in a slot where the device's neuron spikes -> covered
* a successful pulse without a same-slot spike            -> spurious
* a spike whose device attempted a pulse but lacked energy -> missed
* a spike never targeted in its slot                       -> missed

Every raster spike therefore lands in exactly one of covered/missed, and
traces replay deterministically from (config, raster, bank).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import energy as en
from .errors import ConfigError, TraceError
from .model import Layer, RasterPlot, SimConfig, require_valid
from .protocols import PatternBank, charge_and_fire_step, psdw_step

TRACE_VERSION = 1

_PATTERN_PROTOCOLS = ("psdw_random", "psdw_markov")


@dataclass
class DeviceState:
    """Capacitor plus the (single) pending delayed discharge for one implant."""

    capacitor: en.CapacitorState
    layer: Layer
    pending_discharge: int | None = None


@dataclass
class SlotRecord:
    """Everything that happened in one slot."""

    slot: int
    emit: int | None = None
    charged: list[int] = field(default_factory=list)
    fired: list[int] = field(default_factory=list)
    failed: list[int] = field(default_factory=list)
    covered: list[int] = field(default_factory=list)
    missed: list[int] = field(default_factory=list)
    spurious: list[int] = field(default_factory=list)
    replaced: list[list[int]] = field(default_factory=list)  # [device, old, new]

    def to_dict(self) -> dict:
        return {
            "slot": self.slot, "emit": self.emit, "charged": self.charged,
            "fired": self.fired, "failed": self.failed, "covered": self.covered,
            "missed": self.missed, "spurious": self.spurious,
            "replaced": self.replaced,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SlotRecord":
        return cls(slot=d["slot"], emit=d["emit"], charged=list(d["charged"]),
                   fired=list(d["fired"]), failed=list(d["failed"]),
                   covered=list(d["covered"]), missed=list(d["missed"]),
                   spurious=list(d["spurious"]),
                   replaced=[list(r) for r in d["replaced"]])


@dataclass
class SimTrace:
    """Per-slot event log plus the summary counts recorded during the run."""

    protocol: str
    seed: int
    device_count: int
    n_slots: int
    slot_ms: float
    records: list[SlotRecord]
    counts: dict[str, int]
    energy_ledger: dict[str, float]
    trace_version: int = TRACE_VERSION

    def summary_dict(self) -> dict:
        return {
            "trace_version": self.trace_version,
            "protocol": self.protocol,
            "seed": self.seed,
            "device_count": self.device_count,
            "n_slots": self.n_slots,
            "slot_ms": self.slot_ms,
            "counts": dict(self.counts),
            "energy": dict(self.energy_ledger),
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({"summary": self.summary_dict()},
                            sort_keys=True, separators=(",", ":"))]
        for rec in self.records:
            lines.append(json.dumps(rec.to_dict(), sort_keys=True,
                                    separators=(",", ":")))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SimTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TraceError("empty trace")
        try:
            header = json.loads(lines[0])["summary"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise TraceError(f"malformed trace header: {exc}") from exc
        records = [SlotRecord.from_dict(json.loads(ln)) for ln in lines[1:]]
        return cls(
            protocol=header["protocol"], seed=header["seed"],
            device_count=header["device_count"], n_slots=header["n_slots"],
            slot_ms=header["slot_ms"], records=records,
            counts=dict(header["counts"]), energy_ledger=dict(header["energy"]),
            trace_version=header["trace_version"],
        )


def _check_bank(cfg: SimConfig, bank: PatternBank | None) -> None:
    if cfg.protocol == "charge_and_fire":
        if bank is not None:
            raise ConfigError("charge_and_fire does not take a pattern bank")
        return
    if cfg.protocol in _PATTERN_PROTOCOLS:
        if bank is None:
            raise ConfigError(f"{cfg.protocol} requires a pattern bank")
        if bank.window != cfg.window_width:
            raise ConfigError(
                f"bank window {bank.window} != configured window {cfg.window_width}")
        if bank.device_count != cfg.device_count:
            raise ConfigError(
                f"bank covers {bank.device_count} devices, config has {cfg.device_count}")
        if bank.frequency_count != cfg.frequency_count:
            raise ConfigError(
                f"bank holds {bank.frequency_count} patterns, config expects "
                f"{cfg.frequency_count}")
        return
    raise ConfigError(f"unknown protocol {cfg.protocol!r}")


def run(cfg: SimConfig, raster: RasterPlot, bank: PatternBank | None = None
        ) -> SimTrace:
    """Execute the configured protocol over the raster and return the trace."""
    require_valid(cfg)
    _check_bank(cfg, bank)
    if raster.device_count != cfg.device_count:
        raise ConfigError(
            f"raster has {raster.device_count} devices, config has {cfg.device_count}")
    if raster.slot_ms != cfg.slot_ms:
        raise ConfigError("raster and config disagree on slot duration")

    p = cfg.energy
    n_slots = raster.n_slots
    init = en.full_state(p) if cfg.start_charged else en.empty_state(p)
    devices = [DeviceState(capacitor=init, layer=cfg.device_layers[d])
               for d in range(cfg.device_count)]
    remaining = raster  # pattern protocols peel covered spikes off this view

    initial_j = sum(dev.capacitor.stored_j for dev in devices)
    added_j = 0.0
    drained_j = 0.0
    counts = {"covered": 0, "missed": 0, "spurious": 0, "emissions": 0,
              "fired": 0, "failed": 0, "replaced": 0,
              "total_spikes": raster.total_spikes}
    records: list[SlotRecord] = []
    charge_slots_left = 0
    last_emission: int | None = None
    cf = cfg.protocol == "charge_and_fire"

    for t in range(n_slots):
        rec = SlotRecord(slot=t)
        decision = None
        gap_ok = last_emission is None or (t - last_emission) > cfg.min_emission_gap
        if gap_ok:
            if cf:
                decision = charge_and_fire_step(raster, t)
            else:
                decision, remaining = psdw_step(remaining, t, bank)
            if decision.idle:
                decision = None
        if decision is not None:
            rec.emit = decision.emit
            counts["emissions"] += 1
            last_emission = t
            charge_slots_left = cfg.emission_slots

        charging_now = charge_slots_left > 0
        if charging_now:
            charge_slots_left -= 1
            broadcast = cfg.broadcast_charging or not cf
            for d, dev in enumerate(devices):
                addressed = cf and decision is not None and d in decision.immediate_discharges
                if not broadcast and not addressed:
                    continue
                before = dev.capacitor.stored_j
                dev.capacitor = en.step_slot(dev.capacitor, p, True, cfg.slot_ms)
                if addressed:
                    # one dedicated emission tops the addressed device up to E_max
                    dev.capacitor = en.charge_to_full(dev.capacitor, p)
                added_j += dev.capacitor.stored_j - before
                rec.charged.append(d)

        if decision is not None:
            for d in decision.immediate_discharges:
                if devices[d].pending_discharge not in (None, t):
                    rec.replaced.append([d, devices[d].pending_discharge, t])
                    counts["replaced"] += 1
                devices[d].pending_discharge = t
            for d, s in sorted(decision.scheduled_discharges.items()):
                if devices[d].pending_discharge not in (None, s):
                    rec.replaced.append([d, devices[d].pending_discharge, s])
                    counts["replaced"] += 1
                devices[d].pending_discharge = s

        fired: set[int] = set()
        for d, dev in enumerate(devices):
            if dev.pending_discharge != t:
                continue
            dev.pending_discharge = None
            before = dev.capacitor.stored_j
            dev.capacitor, ok = en.discharge_pulse(dev.capacitor, p)
            if ok:
                drained_j += before - dev.capacitor.stored_j
                fired.add(d)
                rec.fired.append(d)
                counts["fired"] += 1
            else:
                rec.failed.append(d)
                counts["failed"] += 1

        for d in range(cfg.device_count):
            spiked = bool(raster.spikes[d, t])
            if spiked and d in fired:
                rec.covered.append(d)
                counts["covered"] += 1
            elif spiked:
                rec.missed.append(d)
                counts["missed"] += 1
            elif d in fired:
                rec.spurious.append(d)
                counts["spurious"] += 1
        records.append(rec)

    assert counts["covered"] + counts["missed"] == counts["total_spikes"]
    return SimTrace(
        protocol=cfg.protocol, seed=cfg.seed, device_count=cfg.device_count,
        n_slots=n_slots, slot_ms=cfg.slot_ms, records=records, counts=counts,
        energy_ledger={"initial_j": initial_j, "added_j": added_j,
                       "drained_j": drained_j},
    )


def replay(trace: SimTrace) -> dict[str, int]:
    """Recount the classification totals from the raw per-slot log.

    Raises TraceError naming the first inconsistent slot when the log has
    gaps or its recount disagrees with the stored summary.
    """
    recount = {"covered": 0, "missed": 0, "spurious": 0, "emissions": 0,
               "fired": 0, "failed": 0, "replaced": 0}
    expected_slot = 0
    for rec in trace.records:
        if rec.slot != expected_slot:
            raise TraceError(
                f"slot {expected_slot} missing from the trace", slot=expected_slot)
        expected_slot += 1
        if rec.emit is not None:
            recount["emissions"] += 1
        recount["covered"] += len(rec.covered)
        recount["missed"] += len(rec.missed)
        recount["spurious"] += len(rec.spurious)
        recount["fired"] += len(rec.fired)
        recount["failed"] += len(rec.failed)
        recount["replaced"] += len(rec.replaced)
        overlap = set(rec.covered) & set(rec.missed)
        if overlap:
            raise TraceError(
                f"devices {sorted(overlap)} both covered and missed in slot "
                f"{rec.slot}", slot=rec.slot)
    if expected_slot != trace.n_slots:
        raise TraceError(
            f"trace ends at slot {expected_slot - 1}, expected {trace.n_slots} slots",
            slot=expected_slot)
    recount["total_spikes"] = recount["covered"] + recount["missed"]
    for key, value in recount.items():
        if trace.counts.get(key) != value:
            raise TraceError(
                f"stored count {key}={trace.counts.get(key)} disagrees with "
                f"replayed {value}")
    return recount
