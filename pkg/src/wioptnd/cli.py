"""Experiment runner: single simulations, parameter sweeps and figure-data
exports.

Artifacts are deterministic: every run records its fully resolved
configuration in a sidecar JSON, and re-running from that sidecar with the
same seed reproduces every output byte for byte. Seeds for sub-streams
(raster, pattern bank) are derived from the master seed with the
documented splitmix64 rule in spikegen.split_seed.

Exit codes: 0 success, 2 configuration error, 3 physics-validation error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import energy as en
from .engine import run as run_engine
from .errors import ConfigError, PhysicsError
from .metrics import (METRICS_CSV_COLUMNS, aggregate_by, compute_metrics,
                      metrics_csv_row)
from .model import (CONFIG_KEYS, SimConfig, config_from_mapping,
                    config_to_mapping, parse_config_json, parse_config_text,
                    require_valid)
from .photonics import OpticsParams, distance_table
from .protocols import (CORTICAL_FLOW_WEIGHTS, PatternBank, TransitionMatrix,
                        bank_from_json, bank_to_json, build_markov_bank,
                        random_pattern_bank, rank_layer_sequences,
                        rank_table_csv)
from .spikegen import (SpikeRateProfile, generate_poisson_raster,
                       raster_from_csv, raster_to_csv, split_seed)

log = logging.getLogger("wioptnd")

_RASTER_STREAM = 1      # split_seed sub-stream tags for single runs
_BANK_STREAM = 2

AGGREGATE_CSV_COLUMNS = (
    "protocol", "n_patterns", "axis", "axis_value", "n",
    "mean_gamma_stim", "std_gamma_stim", "mean_eta_stim_pct",
    "std_eta_stim_pct", "std_is_sentinel",
)

SWEEP_AXES = ("spike_rate", "n_patterns", "device_count",
              "ultrasound_frequency", "harvester_area")

_AXIS_KEY = {
    "spike_rate": "spike.rate_hz",
    "n_patterns": "sim.frequency_count",
    "device_count": "sim.device_count",
    "ultrasound_frequency": "energy.ultrasound_hz",
    "harvester_area": "energy.harvester_cm2",
}


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_mapping(path: Path) -> dict[str, object]:
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return parse_config_json(text)
    return parse_config_text(text)


def _apply_overrides(mapping: dict[str, object], sets: list[str]) -> None:
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        from .model import _parse_value
        mapping[key] = _parse_value(key, raw)


def _sidecar_json(mapping: dict[str, object]) -> str:
    return json.dumps(mapping, sort_keys=True, indent=2) + "\n"


def _load_matrix(mapping: dict[str, object]) -> TransitionMatrix:
    path = mapping.get("markov.matrix_json", "")
    if not path:
        return CORTICAL_FLOW_WEIGHTS
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    import numpy as np
    return TransitionMatrix(np.asarray(data, dtype=float))


def build_bank(cfg: SimConfig, mapping: dict[str, object],
               bank_seed: int) -> PatternBank | None:
    """Construct (or load) the pattern bank matching the configured protocol."""
    bank_path = mapping.get("protocol.bank_json", "")
    if cfg.protocol == "charge_and_fire":
        if bank_path:
            raise ConfigError("charge_and_fire does not take protocol.bank_json")
        return None
    if bank_path:
        data = json.loads(Path(bank_path).read_text(encoding="utf-8"))
        return bank_from_json(data, layer_map=cfg.device_layers)
    if cfg.protocol == "psdw_random":
        return random_pattern_bank(cfg.frequency_count, cfg.window_width,
                                   cfg.device_count, bank_seed)
    ranked = rank_layer_sequences(_load_matrix(mapping))
    return build_markov_bank(ranked, cfg.frequency_count, cfg.device_layers,
                             cfg.window_width)


def _build_raster(cfg: SimConfig, mapping: dict[str, object], raster_seed: int):
    raster_path = mapping.get("spike.raster_csv", "")
    if raster_path:
        raster = raster_from_csv(Path(raster_path).read_text(encoding="utf-8"))
        if raster.device_count != cfg.device_count:
            raise ConfigError(
                f"external raster has {raster.device_count} devices, "
                f"config has {cfg.device_count}")
        return raster
    rate = float(mapping.get("spike.rate_hz", CONFIG_KEYS["spike.rate_hz"].default))
    profile = SpikeRateProfile.constant(rate, cfg.device_count, cfg.duration_s)
    return generate_poisson_raster(profile, cfg.duration_s, cfg.slot_ms,
                                   raster_seed)


def run_single(mapping: dict[str, object], out_dir: Path) -> None:
    """Run one simulation and write raster.csv, trace.jsonl, metrics.csv and
    the resolved-config sidecar."""
    cfg = config_from_mapping(mapping)
    require_valid(cfg)
    raster_seed = split_seed(cfg.seed, _RASTER_STREAM)
    bank_seed = split_seed(cfg.seed, _BANK_STREAM)
    raster = _build_raster(cfg, mapping, raster_seed)
    bank = build_bank(cfg, mapping, bank_seed)
    trace = run_engine(cfg, raster, bank)
    report = compute_metrics(trace)

    resolved = config_to_mapping(cfg)
    for key in ("spike.rate_hz", "spike.raster_csv", "protocol.bank_json",
                "markov.matrix_json"):
        if key in mapping:
            resolved[key] = mapping[key]
    _write_text(out_dir / "config.json", _sidecar_json(resolved))
    _write_text(out_dir / "raster.csv", raster_to_csv(raster))
    _write_text(out_dir / "trace.jsonl", trace.to_jsonl())
    _write_text(out_dir / "summary.json",
                json.dumps(trace.summary_dict(), sort_keys=True, indent=2) + "\n")
    rate = float(mapping.get("spike.rate_hz", CONFIG_KEYS["spike.rate_hz"].default))
    csv = ",".join(METRICS_CSV_COLUMNS) + "\n" + metrics_csv_row(
        cfg.protocol, rate, cfg.frequency_count, cfg.device_count, cfg.seed,
        report) + "\n"
    _write_text(out_dir / "metrics.csv", csv)
    if bank is not None:
        _write_text(out_dir / "bank.json",
                    json.dumps(bank_to_json(bank, cfg.device_layers),
                               sort_keys=True, indent=2) + "\n")
    log.info("run complete: %d covered, %d missed, %d spurious",
             report.n_covered, report.n_mis, report.n_spurious)


# --------------------------------------------------------------------------
# Sweeps.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Variant:
    """One protocol series within a sweep."""

    protocol: str
    n_patterns: int | None = None   # frequency count for pattern protocols

    @property
    def label(self) -> str:
        if self.n_patterns is None:
            return self.protocol
        return f"{self.protocol}@{self.n_patterns}"

    @classmethod
    def parse(cls, token: str) -> "Variant":
        name, _, n = token.partition("@")
        if name not in ("charge_and_fire", "psdw_random", "psdw_markov"):
            raise ConfigError(f"unknown protocol variant {token!r}")
        return cls(name, int(n) if n else None)


@dataclass(frozen=True)
class SweepSpec:
    """One axis swept over values for a set of protocol variants."""

    axis: str
    values: tuple[float, ...]
    variants: tuple[Variant, ...]
    replicates: int
    base: dict

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one axis value")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")


def parse_sweep_text(text: str) -> SweepSpec:
    """Sweep files reuse the config format plus sweep.* keys."""
    sweep_keys: dict[str, str] = {}
    config_lines = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("sweep."):
            key, _, raw = stripped.partition("=")
            sweep_keys[key.strip()] = raw.strip()
        else:
            config_lines.append(line)
    base = parse_config_text("\n".join(config_lines))
    try:
        axis = sweep_keys["sweep.axis"]
        values = tuple(float(v) for v in sweep_keys["sweep.values"].split(","))
        variants = tuple(Variant.parse(tok.strip())
                         for tok in sweep_keys["sweep.variants"].split(","))
    except KeyError as exc:
        raise ConfigError(f"sweep file is missing {exc}") from exc
    replicates = int(sweep_keys.get("sweep.replicates", "1"))
    return SweepSpec(axis, values, variants, replicates, base)


def _run_spec_mapping(variant: Variant, axis: str, value: float,
                      base: dict) -> dict[str, object]:
    mapping = dict(base)
    key = _AXIS_KEY[axis]
    mapping[key] = value if CONFIG_KEYS[key].type == "float" else int(value)
    mapping["sim.protocol"] = variant.protocol
    device_count = int(mapping.get("sim.device_count",
                                   CONFIG_KEYS["sim.device_count"].default))
    if variant.protocol == "charge_and_fire":
        # one-to-one addressing: one frequency per device
        mapping["sim.frequency_count"] = device_count
    elif variant.n_patterns is not None and axis != "n_patterns":
        mapping["sim.frequency_count"] = variant.n_patterns
    return mapping


def _execute_sweep_run(args: tuple) -> tuple[str, int, float, int, str]:
    """Worker: run one (variant, value, replicate) cell, return a CSV row."""
    variant_label, variant_idx, axis, value, value_idx, rep, base, base_seed = args
    variant = Variant.parse(variant_label)
    mapping = _run_spec_mapping(variant, axis, value, base)
    raster_seed = split_seed(base_seed, (value_idx << 20) | rep)
    bank_seed = split_seed(base_seed, (1 << 40) | (variant_idx << 20) | rep)
    mapping["sim.seed"] = raster_seed
    cfg = config_from_mapping(mapping)
    require_valid(cfg)
    raster = _build_raster(cfg, mapping, raster_seed)
    bank = build_bank(cfg, mapping, bank_seed)
    trace = run_engine(cfg, raster, bank)
    report = compute_metrics(trace)
    rate = float(mapping.get("spike.rate_hz", CONFIG_KEYS["spike.rate_hz"].default))
    row = metrics_csv_row(variant.protocol, rate, cfg.frequency_count,
                          cfg.device_count, raster_seed, report)
    return variant_label, cfg.frequency_count, value, rep, row


def run_sweep(spec: SweepSpec, out_dir: Path, base_seed: int,
              jobs: int = 1, name: str = "sweep") -> None:
    """Run every (variant, value, replicate) cell and write metrics.csv plus
    the per-group aggregate.csv. Output order is fixed regardless of jobs."""
    tasks = []
    for vi, variant in enumerate(spec.variants):
        for xi, value in enumerate(spec.values):
            for rep in range(spec.replicates):
                tasks.append((variant.label, vi, spec.axis, value, xi, rep,
                              spec.base, base_seed))
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_sweep_run, tasks))
    else:
        results = [_execute_sweep_run(t) for t in tasks]

    rows = [",".join(METRICS_CSV_COLUMNS)]
    keyed = []
    from .metrics import MetricsReport
    for (variant_label, n_patterns, value, rep, row) in results:
        rows.append(row)
        fields = row.split(",")
        report = MetricsReport(
            n_mis=int(fields[5]), n_covered=int(fields[6]),
            n_spurious=int(fields[7]), n_emissions=int(fields[8]),
            total_spikes=int(fields[9]), gamma_mis=float(fields[10]),
            eta_stim_pct=float(fields[11]), gamma_stim=float(fields[12]))
        protocol = fields[0]
        keyed.append(((protocol, n_patterns, spec.axis, value), report))
    _write_text(out_dir / "metrics.csv", "\n".join(rows) + "\n")

    agg_rows = [",".join(AGGREGATE_CSV_COLUMNS)]
    for key, stats in aggregate_by(keyed).items():
        protocol, n_patterns, axis, value = key
        agg_rows.append(",".join([
            protocol, str(n_patterns), axis, repr(float(value)), str(stats.n),
            repr(stats.mean_gamma_stim), repr(stats.std_gamma_stim),
            repr(stats.mean_eta_stim_pct), repr(stats.std_eta_stim_pct),
            "true" if stats.std_is_sentinel else "false",
        ]))
    _write_text(out_dir / "aggregate.csv", "\n".join(agg_rows) + "\n")

    sidecar = {
        "sweep.name": name, "sweep.axis": spec.axis,
        "sweep.values": list(spec.values),
        "sweep.variants": [v.label for v in spec.variants],
        "sweep.replicates": spec.replicates, "sweep.seed": base_seed,
        "base": {k: v for k, v in sorted(spec.base.items())},
    }
    _write_text(out_dir / "sweep.json",
                json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


# --------------------------------------------------------------------------
# Presets.
# --------------------------------------------------------------------------

_RATES = tuple(float(r) for r in range(100, 131, 5))


def _preset_base(mapping_overrides: dict | None = None) -> dict:
    base: dict[str, object] = {
        "sim.device_count": 4,
        "sim.window_width": 4,
        "sim.slot_ms": 1.0,
        "sim.duration_s": 10.0,
    }
    if mapping_overrides:
        base.update(mapping_overrides)
    return base


def _metrics_presets() -> dict[str, list[SweepSpec]]:
    return {
        "fig14": [SweepSpec(
            "spike_rate", _RATES,
            (Variant("charge_and_fire"), Variant("psdw_random", 10)),
            10, _preset_base())],
        "fig15": [
            SweepSpec("n_patterns", (5.0, 10.0, 20.0),
                      (Variant("psdw_random"),), 10,
                      _preset_base({"spike.rate_hz": 115.0})),
            SweepSpec("device_count", (4.0, 8.0, 12.0, 16.0),
                      (Variant("psdw_random", 10),), 10,
                      _preset_base({"spike.rate_hz": 115.0})),
        ],
        "fig18": [SweepSpec(
            "spike_rate", _RATES,
            (Variant("charge_and_fire"), Variant("psdw_markov", 5),
             Variant("psdw_markov", 10), Variant("psdw_markov", 20)),
            10, _preset_base())],
    }


def _curve_rows_csv(rows: list[tuple[float, int, float, float]]) -> str:
    lines = ["t_ms,n_cycles,voltage_v,energy_j"]
    for t_ms, n, v, e in rows:
        lines.append(f"{t_ms!r},{n},{v!r},{e!r}")
    return "\n".join(lines) + "\n"


def _write_curve_bundle(preset: str, out_dir: Path) -> None:
    """Charging/discharging curve CSVs for the capacitor figure presets."""
    t_max_ms, points = 12.0, 241
    base = en.EnergyParams(ultrasound_hz=500.0)
    if preset == "fig7":
        for target in (8.0, 10.0, 12.0):
            e_max = en.led_pulse_energy_j(
                OpticsParams(target_mw_mm2=target), 0.5, 1e-3, 1.0, 0.3)
            p = replace(base, pulse_energy_j=e_max)
            _write_text(out_dir / f"fig7b_charge_target{target:g}.csv",
                        _curve_rows_csv(en.charge_curve(p, t_max_ms, points)))
            _write_text(out_dir / f"fig7c_discharge_target{target:g}.csv",
                        _curve_rows_csv(en.discharge_curve(p, t_max_ms, points)))
        for area in (1e-4, 2e-4):
            p = replace(base, harvester_cm2=area)
            _write_text(out_dir / f"fig7d_charge_area{area:g}.csv",
                        _curve_rows_csv(en.charge_curve(p, t_max_ms, points)))
            _write_text(out_dir / f"fig7e_discharge_area{area:g}.csv",
                        _curve_rows_csv(en.discharge_curve(p, t_max_ms, points)))
        for freq in (500.0, 3.0e6):
            p = replace(base, ultrasound_hz=freq)
            _write_text(out_dir / f"fig7f_charge_freq{freq:g}.csv",
                        _curve_rows_csv(en.charge_curve(p, t_max_ms, points)))
    elif preset == "fig8":
        for area in (1e-4, 2e-4):
            for freq in (500.0, 3.0e6):
                p = replace(base, harvester_cm2=area, ultrasound_hz=freq)
                _write_text(out_dir / f"fig8_charge_area{area:g}_freq{freq:g}.csv",
                            _curve_rows_csv(en.charge_curve(p, t_max_ms, points)))
    else:
        raise ConfigError(f"unknown curve preset {preset!r}")


# --------------------------------------------------------------------------
# Plot data.
# --------------------------------------------------------------------------

_PLOT_KINDS = {
    "fig14": ("spike_rate", "rate_hz"),
    "fig18": ("spike_rate", "rate_hz"),
    "fig15": ("n_patterns", "n_patterns"),
    "fig15_devices": ("device_count", "device_count"),
}


def emit_plot_data(aggregate_csv: str, kind: str) -> str:
    """Project an aggregate CSV into gnuplot-ready columns.

    One x column plus, per protocol series, mean/std for the stimulation
    ratio and the efficiency ratio. Series order is sorted by label so the
    column layout is stable.
    """
    if kind not in _PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of "
                          f"{sorted(_PLOT_KINDS)}")
    axis, x_name = _PLOT_KINDS[kind]
    lines = [ln for ln in aggregate_csv.splitlines() if ln.strip()]
    if not lines or lines[0].split(",")[:4] != list(AGGREGATE_CSV_COLUMNS[:4]):
        raise ConfigError("not an aggregate CSV")
    table: dict[float, dict[str, tuple[float, float, float, float]]] = {}
    labels = set()
    for ln in lines[1:]:
        f = ln.split(",")
        if f[2] != axis:
            continue
        label = f[0] if f[0] == "charge_and_fire" else f"{f[0]}_p{f[1]}"
        labels.add(label)
        table.setdefault(float(f[3]), {})[label] = (
            float(f[5]), float(f[6]), float(f[7]), float(f[8]))
    ordered = sorted(labels)
    header = ["# " + " ".join(
        [x_name] + [f"{stat}_{label}" for label in ordered
                    for stat in ("mean_gamma_stim", "std_gamma_stim",
                                 "mean_eta_stim_pct", "std_eta_stim_pct")])]
    out = header
    for x in sorted(table):
        row = [repr(x)]
        for label in ordered:
            cell = table[x].get(label, (math.nan,) * 4)
            row.extend(repr(v) for v in cell)
        out.append(" ".join(row))
    return "\n".join(out) + "\n"


def parse_plot_data(text: str) -> tuple[list[str], list[list[float]]]:
    """Parse emit_plot_data output back into column names and float rows."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    names = lines[0].lstrip("# ").split()
    rows = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    return names, rows


# --------------------------------------------------------------------------
# Argument parsing and entry point.
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wioptnd",
        description="Deterministic simulator for ultrasonically charged "
                    "optogenetic implant networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--config", type=Path, help="config file (text or sidecar JSON)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        if seed:
            p.add_argument("--seed", type=int, help="override sim.seed")

    p_run = sub.add_parser("run", help="run one simulation and write artifacts")
    add_common(p_run)
    p_run.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="json additionally writes metrics.json")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep or preset")
    add_common(p_sweep)
    p_sweep.add_argument("--preset", choices=("fig7", "fig8", "fig14", "fig15", "fig18"))
    p_sweep.add_argument("--spec", type=Path, help="sweep spec file")
    p_sweep.add_argument("--out", type=Path, default=Path("out"))
    p_sweep.add_argument("--replicates", type=int, help="override replicate count")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel workers (output order is unaffected)")

    p_opt = sub.add_parser("optics", help="emit the light-transport CSV table")
    add_common(p_opt, seed=False)
    p_opt.add_argument("--d-max", type=float, default=3.0, help="max distance, mm")
    p_opt.add_argument("--d-step", type=float, default=0.01, help="grid step, mm")
    p_opt.add_argument("--out", type=Path, help="output file (default stdout)")

    p_en = sub.add_parser("energy-curves",
                          help="emit capacitor charge/discharge curve CSV")
    add_common(p_en, seed=False)
    p_en.add_argument("--phase", choices=("charge", "discharge"), default="charge")
    p_en.add_argument("--t-max-ms", type=float, default=12.0)
    p_en.add_argument("--points", type=int, default=241)
    p_en.add_argument("--out", type=Path, help="output file (default stdout)")

    p_plot = sub.add_parser("plot-data", help="project an aggregate CSV for gnuplot")
    p_plot.add_argument("--aggregate", type=Path, required=True)
    p_plot.add_argument("--kind", required=True)
    p_plot.add_argument("--out", type=Path, help="output file (default stdout)")

    p_rank = sub.add_parser("rank-table",
                            help="emit the layer-sequence ranking CSV")
    p_rank.add_argument("--matrix-json", type=Path,
                        help="layer-transition matrix (default: built-in weights)")
    p_rank.add_argument("--out", type=Path, help="output file (default stdout)")
    return parser


def _mapping_from_args(args) -> dict[str, object]:
    mapping = _load_mapping(args.config) if args.config else {}
    _apply_overrides(mapping, args.set)
    if getattr(args, "seed", None) is not None:
        mapping["sim.seed"] = args.seed
    return mapping


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _write_text(out, text)


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("WIOPTND_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            mapping = _mapping_from_args(args)
            run_single(mapping, args.out)
            if args.format == "json":
                trace_text = (args.out / "metrics.csv").read_text(encoding="utf-8")
                header, row = trace_text.strip().split("\n")
                _write_text(args.out / "metrics.json", json.dumps(
                    dict(zip(header.split(","), row.split(","))),
                    sort_keys=True, indent=2) + "\n")
        elif args.command == "sweep":
            mapping = _mapping_from_args(args)
            base_seed = int(mapping.get("sim.seed", 0))
            if args.preset in ("fig7", "fig8"):
                _write_curve_bundle(args.preset, args.out)
            elif args.preset:
                for spec in _metrics_presets()[args.preset]:
                    spec = replace(spec, base={**spec.base, **mapping})
                    if args.replicates:
                        spec = replace(spec, replicates=args.replicates)
                    sub_dir = args.out if len(_metrics_presets()[args.preset]) == 1 \
                        else args.out / f"{args.preset}_{spec.axis}"
                    run_sweep(spec, sub_dir, base_seed, jobs=args.jobs,
                              name=f"{args.preset}:{spec.axis}")
            elif args.spec:
                spec = parse_sweep_text(args.spec.read_text(encoding="utf-8"))
                spec = replace(spec, base={**spec.base, **mapping})
                if args.replicates:
                    spec = replace(spec, replicates=args.replicates)
                run_sweep(spec, args.out, base_seed, jobs=args.jobs)
            else:
                raise ConfigError("sweep needs --preset or --spec")
        elif args.command == "optics":
            mapping = _mapping_from_args(args)
            cfg = config_from_mapping(mapping)
            require_valid(cfg)
            n = int(round(args.d_max / args.d_step)) + 1
            grid = [i * args.d_step for i in range(n)]
            lines = ["d_mm,dpf,transmittance,required_source_mw_mm2"]
            for d, f, t, r in distance_table(cfg.optics, grid):
                lines.append(f"{d!r},{f!r},{t!r},{r!r}")
            _emit("\n".join(lines) + "\n", args.out)
        elif args.command == "energy-curves":
            mapping = _mapping_from_args(args)
            cfg = config_from_mapping(mapping)
            require_valid(cfg)
            curve = en.charge_curve if args.phase == "charge" else en.discharge_curve
            _emit(_curve_rows_csv(curve(cfg.energy, args.t_max_ms, args.points)),
                  args.out)
        elif args.command == "plot-data":
            text = args.aggregate.read_text(encoding="utf-8")
            _emit(emit_plot_data(text, args.kind), args.out)
        elif args.command == "rank-table":
            matrix = CORTICAL_FLOW_WEIGHTS
            if args.matrix_json:
                import numpy as np
                matrix = TransitionMatrix(np.asarray(
                    json.loads(args.matrix_json.read_text(encoding="utf-8")),
                    dtype=float))
            _emit(rank_table_csv(rank_layer_sequences(matrix)), args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhysicsError as exc:
        print(f"physics validation error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
