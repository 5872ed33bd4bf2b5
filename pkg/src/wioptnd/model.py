"""Shared domain vocabulary: layers, rasters and the simulation config.

The external configuration format is line-oriented UTF-8 text with
``key = value`` pairs and dotted section prefixes, e.g.::

    sim.slot_ms = 1.0
    energy.ultrasound_hz = 3000000.0

Unknown keys are errors. The same mapping also round-trips through a flat
JSON object (used for the resolved-config sidecar written next to every
artifact). See CONFIG_KEYS for the full schema.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyParams, validate_energy, led_pulse_energy_j
from .errors import ConfigError, Violation
from .photonics import OpticsParams, validate_optics


class Layer(enum.Enum):
    """Cortical layer hosting an implant; total order L2/3 < L4 < L5 < L6."""

    L23 = "L2/3"
    L4 = "L4"
    L5 = "L5"
    L6 = "L6"

    @property
    def index(self) -> int:
        return LAYER_ORDER.index(self)

    @classmethod
    def from_name(cls, name: str) -> "Layer":
        for layer in cls:
            if layer.value == name:
                return layer
        raise ConfigError(f"unknown layer name {name!r}; expected one of "
                          f"{[l.value for l in cls]}")


LAYER_ORDER: tuple[Layer, ...] = (Layer.L23, Layer.L4, Layer.L5, Layer.L6)

PROTOCOL_CHOICES = ("charge_and_fire", "psdw_random", "psdw_markov")


def round_robin_layers(device_count: int) -> tuple[Layer, ...]:
    """Default device-to-layer assignment: cycle through the four layers."""
    return tuple(LAYER_ORDER[i % len(LAYER_ORDER)] for i in range(device_count))


@dataclass(eq=False)
class RasterPlot:
    """Binary spike matrix: rows are devices, columns are time slots."""

    spikes: np.ndarray          # uint8, shape (device_count, n_slots)
    slot_ms: float

    def __post_init__(self):
        self.spikes = np.ascontiguousarray(self.spikes, dtype=np.uint8)
        if self.spikes.ndim != 2:
            raise ValueError("spike matrix must be 2-D (devices x slots)")
        if np.any(self.spikes > 1):
            raise ValueError("spike matrix entries must be 0 or 1")
        if self.slot_ms <= 0:
            raise ValueError("slot_ms must be > 0")

    @property
    def device_count(self) -> int:
        return self.spikes.shape[0]

    @property
    def n_slots(self) -> int:
        return self.spikes.shape[1]

    @property
    def total_spikes(self) -> int:
        return int(self.spikes.sum())

    def spike_slots(self, device: int) -> list[int]:
        return [int(s) for s in np.flatnonzero(self.spikes[device])]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterPlot):
            return NotImplemented
        return self.slot_ms == other.slot_ms and np.array_equal(self.spikes, other.spikes)

    @classmethod
    def from_spike_lists(cls, spike_slots: list[list[int]], n_slots: int,
                         slot_ms: float = 1.0) -> "RasterPlot":
        m = np.zeros((len(spike_slots), n_slots), dtype=np.uint8)
        for d, slots in enumerate(spike_slots):
            for s in slots:
                m[d, s] = 1
        return cls(m, slot_ms)


def slots_for_duration(duration_s: float, slot_ms: float) -> int:
    return math.ceil(duration_s * 1000.0 / slot_ms)


@dataclass(frozen=True)
class SimConfig:
    """Top-level simulation configuration, immutable once built."""

    device_count: int = 3
    frequency_count: int = 3
    window_width: int = 4
    slot_ms: float = 1.0
    duration_s: float = 10.0
    seed: int = 0
    protocol: str = "charge_and_fire"
    device_layers: tuple[Layer, ...] = ()
    start_charged: bool = True
    broadcast_charging: bool = True
    emission_slots: int = 1
    min_emission_gap: int = 0
    optics: OpticsParams = field(default_factory=OpticsParams)
    energy: EnergyParams = field(default_factory=EnergyParams)

    def __post_init__(self):
        if not self.device_layers:
            object.__setattr__(self, "device_layers",
                               round_robin_layers(self.device_count))

    @property
    def n_slots(self) -> int:
        return slots_for_duration(self.duration_s, self.slot_ms)


def validate_config(cfg: SimConfig) -> list[Violation]:
    """Return every violated invariant; an empty list means the config is valid."""
    out: list[Violation] = []
    if cfg.device_count < 1:
        out.append(Violation("config", "sim.device_count", "must be >= 1"))
    if cfg.frequency_count < 1:
        out.append(Violation("config", "sim.frequency_count", "must be >= 1"))
    if cfg.window_width < 1:
        out.append(Violation("config", "sim.window_width", "must be >= 1"))
    if not cfg.slot_ms > 0:
        out.append(Violation("config", "sim.slot_ms", "must be > 0"))
    if not cfg.duration_s > 0:
        out.append(Violation("config", "sim.duration_s", "must be > 0"))
    if cfg.seed < 0:
        out.append(Violation("config", "sim.seed", "must be a non-negative integer"))
    if cfg.protocol not in PROTOCOL_CHOICES:
        out.append(Violation("config", "sim.protocol",
                             f"must be one of {PROTOCOL_CHOICES}"))
    if len(cfg.device_layers) != cfg.device_count:
        out.append(Violation("config", "sim.device_layers",
                             "must assign exactly one layer per device"))
    if cfg.protocol == "charge_and_fire" and cfg.device_count > cfg.frequency_count:
        out.append(Violation(
            "config", "sim.frequency_count",
            "one-to-one addressing requires device_count <= frequency_count"))
    if cfg.emission_slots < 1:
        out.append(Violation("config", "sim.emission_slots", "must be >= 1"))
    if cfg.min_emission_gap < 0:
        out.append(Violation("config", "sim.min_emission_gap", "must be >= 0"))
    if cfg.protocol == "psdw_markov" and cfg.window_width < 4:
        out.append(Violation("config", "sim.window_width",
                             "layer-sequence patterns span 4 slots; need >= 4"))
    out.extend(validate_optics(cfg.optics))
    out.extend(validate_energy(cfg.energy))
    return out


def require_valid(cfg: SimConfig) -> None:
    """Raise ConfigError or PhysicsError when the config has violations."""
    from .errors import PhysicsError

    violations = validate_config(cfg)
    if not violations:
        return
    message = "; ".join(str(v) for v in violations)
    if any(v.kind == "config" for v in violations):
        raise ConfigError(message)
    raise PhysicsError(message)


# --------------------------------------------------------------------------
# External key = value configuration format.
#
# owner: "sim" keys build the SimConfig itself, "derive" keys feed the
# automatic pulse-energy derivation, "cli" keys are consumed by the
# experiment runner (spike generation, pattern-bank files).
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Key:
    type: str            # int | float | bool | str | layers | float_or_auto
    default: object
    owner: str
    doc: str
    choices: tuple = ()


CONFIG_KEYS: dict[str, _Key] = {
    "sim.device_count": _Key("int", 3, "sim", "number of implants"),
    "sim.frequency_count": _Key("int", 3, "sim", "number of ultrasound addressing frequencies / patterns"),
    "sim.window_width": _Key("int", 4, "sim", "sliding detection window width in slots"),
    "sim.slot_ms": _Key("float", 1.0, "sim", "time-slot duration in ms"),
    "sim.duration_s": _Key("float", 10.0, "sim", "raster duration in seconds"),
    "sim.seed": _Key("int", 0, "sim", "64-bit seed; fixes every stochastic draw"),
    "sim.protocol": _Key("str", "charge_and_fire", "sim", "charging protocol",
                         choices=PROTOCOL_CHOICES),
    "sim.device_layers": _Key("layers", "round_robin", "sim",
                              "round_robin or a comma list of layer names, one per device"),
    "sim.start_charged": _Key("bool", True, "sim", "start every capacitor at E_max"),
    "sim.broadcast_charging": _Key("bool", True, "sim",
                                   "emissions charge all devices, not only the addressed one"),
    "sim.emission_slots": _Key("int", 1, "sim", "slots of charging per emission"),
    "sim.min_emission_gap": _Key("int", 0, "sim",
                                 "idle slots enforced between consecutive emissions"),
    "optics.mu_a_mm": _Key("float", 0.07, "sim", "tissue absorption coefficient, 1/mm"),
    "optics.mu_s_prime_mm": _Key("float", 1.404, "sim", "reduced scattering coefficient, 1/mm"),
    "optics.g_const": _Key("float", 0.0, "sim", "geometry constant in the transmittance exponent"),
    "optics.target_mw_mm2": _Key("float", 10.0, "sim", "intensity required at the neuron, mW/mm^2"),
    "optics.wavelength_nm": _Key("float", 480.0, "sim", "stimulation wavelength (informational)"),
    "energy.source_mw_cm2": _Key("float", 720.0, "sim", "ultrasound intensity at the emitter, mW/cm^2"),
    "energy.atten_db_cm_mhz": _Key("float", 0.435, "sim", "ultrasound attenuation, dB/(cm*MHz)"),
    "energy.ultrasound_hz": _Key("float", 3.0e6, "sim", "ultrasound / vibration frequency, Hz"),
    "energy.depth_cm": _Key("float", 0.2, "sim", "emitter-to-implant depth, cm"),
    "energy.harvester_cm2": _Key("float", 1.0e-4, "sim", "harvester effective area, cm^2"),
    "energy.conversion_eff": _Key("float", 0.5, "sim", "electromechanical conversion rate (0, 1]"),
    "energy.voltage_v": _Key("float", 1.0, "sim", "generated voltage V_g"),
    "energy.capacitance_f": _Key("float", 1.0e-8, "sim", "storage capacitance, F"),
    "energy.pulse_energy_j": _Key("float_or_auto", "auto", "sim",
                                  "per-pulse energy E_max in J, or auto to derive from the optics"),
    "energy.led_distance_mm": _Key("float", 0.5, "derive", "LED-to-neuron distance used when deriving E_max"),
    "energy.led_area_mm2": _Key("float", 1.0e-4, "derive", "LED emitting area used when deriving E_max"),
    "energy.led_pulse_ms": _Key("float", 1.0, "derive", "pulse width used when deriving E_max"),
    "energy.led_efficiency": _Key("float", 0.3, "derive", "LED wall-plug efficiency used when deriving E_max"),
    "spike.rate_hz": _Key("float", 100.0, "cli", "homogeneous per-device spike rate"),
    "spike.raster_csv": _Key("str", "", "cli", "path to an externally supplied raster CSV (overrides generation)"),
    "protocol.bank_json": _Key("str", "", "cli", "path to an externally supplied pattern-bank JSON"),
    "markov.matrix_json": _Key("str", "", "cli", "path to a layer-transition matrix JSON (default: built-in weights)"),
}


def _parse_value(key: str, raw: str):
    spec = CONFIG_KEYS[key]
    raw = raw.strip()
    try:
        if spec.type == "int":
            return int(raw)
        if spec.type == "float":
            return float(raw)
        if spec.type == "float_or_auto":
            return "auto" if raw == "auto" else float(raw)
        if spec.type == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if spec.type == "layers":
            return raw
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {spec.type}") from exc


def _render_value(key: str, value) -> str:
    spec = CONFIG_KEYS[key]
    if spec.type == "bool":
        return "true" if value else "false"
    if spec.type in ("float", "float_or_auto") and not isinstance(value, str):
        return repr(float(value))
    return str(value)


def parse_config_text(text: str) -> dict[str, object]:
    """Parse key = value lines into a typed mapping. Unknown keys are errors."""
    mapping: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in mapping:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = _parse_value(key, raw)
    return mapping


def parse_config_json(text: str) -> dict[str, object]:
    """Parse the sidecar JSON form: a flat object with the same dotted keys."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be a flat object of dotted keys")
    mapping: dict[str, object] = {}
    for key, value in data.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        mapping[key] = _parse_value(key, _render_value(key, value)
                                    if not isinstance(value, str) else value)
    return mapping


def render_config_text(mapping: dict[str, object]) -> str:
    """Render a mapping back to the line-oriented format, schema order."""
    lines = []
    for key in CONFIG_KEYS:
        if key in mapping:
            lines.append(f"{key} = {_render_value(key, mapping[key])}")
    extra = set(mapping) - set(CONFIG_KEYS)
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)}")
    return "\n".join(lines) + "\n"


def _parse_layers(value: str, device_count: int) -> tuple[Layer, ...]:
    if value == "round_robin":
        return round_robin_layers(device_count)
    layers = tuple(Layer.from_name(tok.strip()) for tok in value.split(","))
    if len(layers) != device_count:
        raise ConfigError(
            f"sim.device_layers lists {len(layers)} layers for "
            f"{device_count} devices")
    return layers


def config_from_mapping(mapping: dict[str, object]) -> SimConfig:
    """Build a SimConfig from a parsed mapping, deriving E_max when set to auto."""
    def get(key):
        return mapping.get(key, CONFIG_KEYS[key].default)

    optics = OpticsParams(
        mu_a_mm=get("optics.mu_a_mm"),
        mu_s_prime_mm=get("optics.mu_s_prime_mm"),
        g_const=get("optics.g_const"),
        target_mw_mm2=get("optics.target_mw_mm2"),
        wavelength_nm=get("optics.wavelength_nm"),
    )
    pulse = get("energy.pulse_energy_j")
    if pulse == "auto":
        pulse = led_pulse_energy_j(
            optics,
            led_distance_mm=get("energy.led_distance_mm"),
            led_area_mm2=get("energy.led_area_mm2"),
            pulse_ms=get("energy.led_pulse_ms"),
            led_efficiency=get("energy.led_efficiency"),
        )
    energy = EnergyParams(
        source_mw_cm2=get("energy.source_mw_cm2"),
        atten_db_cm_mhz=get("energy.atten_db_cm_mhz"),
        ultrasound_hz=get("energy.ultrasound_hz"),
        depth_cm=get("energy.depth_cm"),
        harvester_cm2=get("energy.harvester_cm2"),
        conversion_eff=get("energy.conversion_eff"),
        voltage_v=get("energy.voltage_v"),
        capacitance_f=get("energy.capacitance_f"),
        pulse_energy_j=pulse,
    )
    device_count = get("sim.device_count")
    return SimConfig(
        device_count=device_count,
        frequency_count=get("sim.frequency_count"),
        window_width=get("sim.window_width"),
        slot_ms=get("sim.slot_ms"),
        duration_s=get("sim.duration_s"),
        seed=get("sim.seed"),
        protocol=get("sim.protocol"),
        device_layers=_parse_layers(get("sim.device_layers"), device_count),
        start_charged=get("sim.start_charged"),
        broadcast_charging=get("sim.broadcast_charging"),
        emission_slots=get("sim.emission_slots"),
        min_emission_gap=get("sim.min_emission_gap"),
        optics=optics,
        energy=energy,
    )


def config_to_mapping(cfg: SimConfig) -> dict[str, object]:
    """Serialize a SimConfig to the resolved mapping (E_max always numeric)."""
    return {
        "sim.device_count": cfg.device_count,
        "sim.frequency_count": cfg.frequency_count,
        "sim.window_width": cfg.window_width,
        "sim.slot_ms": cfg.slot_ms,
        "sim.duration_s": cfg.duration_s,
        "sim.seed": cfg.seed,
        "sim.protocol": cfg.protocol,
        "sim.device_layers": ",".join(l.value for l in cfg.device_layers),
        "sim.start_charged": cfg.start_charged,
        "sim.broadcast_charging": cfg.broadcast_charging,
        "sim.emission_slots": cfg.emission_slots,
        "sim.min_emission_gap": cfg.min_emission_gap,
        "optics.mu_a_mm": cfg.optics.mu_a_mm,
        "optics.mu_s_prime_mm": cfg.optics.mu_s_prime_mm,
        "optics.g_const": cfg.optics.g_const,
        "optics.target_mw_mm2": cfg.optics.target_mw_mm2,
        "optics.wavelength_nm": cfg.optics.wavelength_nm,
        "energy.source_mw_cm2": cfg.energy.source_mw_cm2,
        "energy.atten_db_cm_mhz": cfg.energy.atten_db_cm_mhz,
        "energy.ultrasound_hz": cfg.energy.ultrasound_hz,
        "energy.depth_cm": cfg.energy.depth_cm,
        "energy.harvester_cm2": cfg.energy.harvester_cm2,
        "energy.conversion_eff": cfg.energy.conversion_eff,
        "energy.voltage_v": cfg.energy.voltage_v,
        "energy.capacitance_f": cfg.energy.capacitance_f,
        "energy.pulse_energy_j": cfg.energy.pulse_energy_j,
    }


def config_roundtrip(cfg: SimConfig) -> SimConfig:
    """Serialize to the external text format and parse back."""
    return config_from_mapping(parse_config_text(
        render_config_text(config_to_mapping(cfg))))
