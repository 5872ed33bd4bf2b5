"""CLI surface: exit codes, artifacts, determinism, sweeps, plot data."""

import json
import math
from pathlib import Path

import pytest

from wioptnd.cli import emit_plot_data, main, parse_plot_data
from wioptnd.engine import SimTrace, replay
from wioptnd.metrics import METRICS_CSV_COLUMNS
from wioptnd.photonics import OpticsParams, dpf, transmittance

DEMO_CONFIG = """\
sim.device_count = 3
sim.frequency_count = 3
sim.duration_s = 0.5
sim.seed = 42
sim.protocol = charge_and_fire
spike.rate_hz = 80.0
"""


def write_config(tmp_path: Path, text: str = DEMO_CONFIG) -> Path:
    path = tmp_path / "demo.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def test_run_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("raster.csv", "trace.jsonl", "metrics.csv", "config.json",
                 "summary.json"):
        assert (out / name).exists(), name
    header = read(out / "metrics.csv").splitlines()[0]
    assert header == ",".join(METRICS_CSV_COLUMNS)
    trace = SimTrace.from_jsonl(read(out / "trace.jsonl"))
    assert replay(trace) == trace.counts


def test_run_fda_cap_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--set", "energy.source_mw_cm2=800"])
    assert code == 3
    assert "720" in capsys.readouterr().err


def test_run_unknown_key_exit_code(tmp_path):
    cfg = write_config(tmp_path, DEMO_CONFIG + "sim.flux_capacitor = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_run_missing_file_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == 4


def test_run_bank_mismatch_exit_code(tmp_path):
    bank = tmp_path / "bank.json"
    bank.write_text(json.dumps({"window_width": 4, "patterns": []}),
                    encoding="utf-8")
    cfg = write_config(tmp_path, DEMO_CONFIG +
                       f"protocol.bank_json = {bank}\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_run_seeded_twice_identical(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--seed", "42", "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--seed", "42", "--out", str(b)]) == 0
    for name in ("raster.csv", "trace.jsonl", "metrics.csv", "config.json",
                 "summary.json"):
        assert read(a / name) == read(b / name), name


def test_run_from_sidecar_reproduces(tmp_path):
    cfg = write_config(tmp_path)
    a = tmp_path / "a"
    main(["run", "--config", str(cfg), "--out", str(a)])
    b = tmp_path / "b"
    assert main(["run", "--config", str(a / "config.json"), "--out", str(b)]) == 0
    for name in ("raster.csv", "trace.jsonl", "metrics.csv"):
        assert read(a / name) == read(b / name), name


def test_run_psdw_writes_bank(tmp_path):
    cfg = write_config(tmp_path, DEMO_CONFIG.replace(
        "charge_and_fire", "psdw_random"))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--set", "sim.frequency_count=5"]) == 0
    bank = json.loads(read(out / "bank.json"))
    assert len(bank["patterns"]) == 5


def test_run_external_raster(tmp_path):
    cfg = write_config(tmp_path)
    first = tmp_path / "first"
    main(["run", "--config", str(cfg), "--out", str(first)])
    reused = write_config(tmp_path, DEMO_CONFIG +
                          f"spike.raster_csv = {first / 'raster.csv'}\n")
    second = tmp_path / "second"
    assert main(["run", "--config", str(reused), "--out", str(second)]) == 0
    assert read(first / "raster.csv") == read(second / "raster.csv")


def test_run_json_format_extra_artifact(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--format", "json"]) == 0
    data = json.loads(read(out / "metrics.json"))
    assert data["protocol"] == "charge_and_fire"


def test_optics_table(tmp_path):
    out = tmp_path / "optics.csv"
    assert main(["optics", "--d-max", "1.0", "--d-step", "0.5",
                 "--out", str(out)]) == 0
    lines = read(out).strip().splitlines()
    assert lines[0] == "d_mm,dpf,transmittance,required_source_mw_mm2"
    assert len(lines) == 4
    p = OpticsParams()
    row = lines[2].split(",")
    assert float(row[1]) == pytest.approx(dpf(p, 0.5), rel=1e-12)
    assert float(row[2]) == pytest.approx(transmittance(p, 0.5), rel=1e-12)


def test_energy_curves(tmp_path):
    out = tmp_path / "charge.csv"
    assert main(["energy-curves", "--phase", "charge", "--t-max-ms", "10",
                 "--points", "11", "--out", str(out)]) == 0
    lines = read(out).strip().splitlines()
    assert lines[0] == "t_ms,n_cycles,voltage_v,energy_j"
    assert len(lines) == 12
    energies = [float(ln.split(",")[3]) for ln in lines[1:]]
    assert energies == sorted(energies)


def test_rank_table(tmp_path):
    out = tmp_path / "rank.csv"
    assert main(["rank-table", "--out", str(out)]) == 0
    lines = read(out).strip().splitlines()
    assert len(lines) == 25


SWEEP_SPEC = """\
sweep.axis = spike_rate
sweep.values = 100,130
sweep.variants = charge_and_fire,psdw_random@4
sweep.replicates = 2
sim.device_count = 3
sim.duration_s = 0.5
sim.seed = 11
"""


def test_sweep_spec_file(tmp_path):
    spec = tmp_path / "sweep.cfg"
    spec.write_text(SWEEP_SPEC, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["sweep", "--spec", str(spec), "--out", str(out)]) == 0
    rows = read(out / "metrics.csv").strip().splitlines()
    assert len(rows) == 1 + 2 * 2 * 2   # header + variants*values*replicates
    agg = read(out / "aggregate.csv").strip().splitlines()
    assert len(agg) == 1 + 2 * 2        # one group per variant*value
    assert (out / "sweep.json").exists()


def test_sweep_jobs_do_not_change_output(tmp_path):
    spec = tmp_path / "sweep.cfg"
    spec.write_text(SWEEP_SPEC, encoding="utf-8")
    out1, out2 = tmp_path / "j1", tmp_path / "j2"
    assert main(["sweep", "--spec", str(spec), "--out", str(out1)]) == 0
    assert main(["sweep", "--spec", str(spec), "--out", str(out2),
                 "--jobs", "2"]) == 0
    assert read(out1 / "metrics.csv") == read(out2 / "metrics.csv")
    assert read(out1 / "aggregate.csv") == read(out2 / "aggregate.csv")


def test_sweep_preset_curves(tmp_path):
    out = tmp_path / "fig7"
    assert main(["sweep", "--preset", "fig7", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert "fig7b_charge_target8.csv" in names
    assert "fig7c_discharge_target12.csv" in names
    assert "fig7f_charge_freq3e+06.csv" in names
    out8 = tmp_path / "fig8"
    assert main(["sweep", "--preset", "fig8", "--out", str(out8)]) == 0
    assert len(list(out8.iterdir())) == 4


def test_sweep_preset_requires_choice(tmp_path):
    assert main(["sweep", "--out", str(tmp_path / "x")]) == 2


def test_sweep_preset_reduced_deterministic(tmp_path):
    args = ["sweep", "--preset", "fig14", "--replicates", "2",
            "--set", "sim.duration_s=0.3", "--seed", "5"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert read(a / "metrics.csv") == read(b / "metrics.csv")
    assert read(a / "aggregate.csv") == read(b / "aggregate.csv")


def test_plot_data_roundtrip(tmp_path):
    spec = tmp_path / "sweep.cfg"
    spec.write_text(SWEEP_SPEC, encoding="utf-8")
    out = tmp_path / "out"
    main(["sweep", "--spec", str(spec), "--out", str(out)])
    aggregate_text = read(out / "aggregate.csv")
    text = emit_plot_data(aggregate_text, "fig14")
    names, rows = parse_plot_data(text)
    assert names[0] == "rate_hz"
    assert len(rows) == 2
    assert rows[0][0] == 100.0 and rows[1][0] == 130.0
    # emit -> parse -> emit is lossless
    again = emit_plot_data(aggregate_text, "fig14")
    assert again == text
    for row in rows:
        for value in row:
            assert not math.isnan(value)


def test_plot_data_header_only_for_empty(tmp_path):
    from wioptnd.cli import AGGREGATE_CSV_COLUMNS
    header_only = ",".join(AGGREGATE_CSV_COLUMNS) + "\n"
    text = emit_plot_data(header_only, "fig14")
    lines = text.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("#")


def test_plot_data_unknown_kind(tmp_path):
    agg = tmp_path / "agg.csv"
    from wioptnd.cli import AGGREGATE_CSV_COLUMNS
    agg.write_text(",".join(AGGREGATE_CSV_COLUMNS) + "\n", encoding="utf-8")
    assert main(["plot-data", "--aggregate", str(agg), "--kind", "fig99"]) == 2


def test_plot_data_cli_file_output(tmp_path):
    spec = tmp_path / "sweep.cfg"
    spec.write_text(SWEEP_SPEC, encoding="utf-8")
    out = tmp_path / "out"
    main(["sweep", "--spec", str(spec), "--out", str(out)])
    dat = tmp_path / "fig.dat"
    assert main(["plot-data", "--aggregate", str(out / "aggregate.csv"),
                 "--kind", "fig14", "--out", str(dat)]) == 0
    names, rows = parse_plot_data(read(dat))
    assert len(names) == 1 + 2 * 4      # x column + 2 series * 4 stats


def test_preset_definitions_match_contract():
    from wioptnd.cli import _metrics_presets
    presets = _metrics_presets()
    fig14 = presets["fig14"][0]
    assert fig14.axis == "spike_rate"
    assert fig14.values == tuple(float(r) for r in range(100, 131, 5))
    assert [v.label for v in fig14.variants] == ["charge_and_fire",
                                                 "psdw_random@10"]
    assert fig14.replicates == 10
    fig18 = presets["fig18"][0]
    assert [v.label for v in fig18.variants] == [
        "charge_and_fire", "psdw_markov@5", "psdw_markov@10", "psdw_markov@20"]
    axes = [s.axis for s in presets["fig15"]]
    assert axes == ["n_patterns", "device_count"]
    assert presets["fig15"][0].values == (5.0, 10.0, 20.0)


def test_fig15_preset_writes_both_sweeps(tmp_path):
    out = tmp_path / "f15"
    assert main(["sweep", "--preset", "fig15", "--replicates", "1",
                 "--set", "sim.duration_s=0.2", "--out", str(out)]) == 0
    assert (out / "fig15_n_patterns" / "aggregate.csv").exists()
    assert (out / "fig15_device_count" / "aggregate.csv").exists()


def test_custom_markov_matrix(tmp_path):
    matrix = [[0.0, 0.9, 0.0, 0.0],
              [0.0, 0.0, 0.9, 0.0],
              [0.0, 0.0, 0.0, 0.9],
              [0.9, 0.0, 0.0, 0.0]]
    mpath = tmp_path / "matrix.json"
    mpath.write_text(json.dumps(matrix), encoding="utf-8")
    rank = tmp_path / "rank.csv"
    assert main(["rank-table", "--matrix-json", str(mpath),
                 "--out", str(rank)]) == 0
    top = read(rank).splitlines()[1]
    assert top.startswith("1,L2/3->L4->L5->L6,")
    cfg = write_config(tmp_path, DEMO_CONFIG.replace(
        "charge_and_fire", "psdw_markov") +
        f"markov.matrix_json = {mpath}\nsim.window_width = 4\n")
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--set", "sim.frequency_count=4"]) == 0
    bank = json.loads(read(out / "bank.json"))
    assert bank["keyed_by"] == "layer"
