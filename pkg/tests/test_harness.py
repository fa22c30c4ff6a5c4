import csv
import json
import math

import pytest

from usris.cli import EXIT_CONFIG, EXIT_DEGENERATE, main
from usris.config import SystemConfig, dump_config, parse_config
from usris.experiments import (ARCHITECTURES, SWEEP_COLUMNS, architecture, build_scenario, full_topology,
                               ordering_check, rescaled_snr, run_cells, run_ear_study, run_rate_sweep,
                               write_ear_study, write_sweep)
from usris.geometry import FLAT
from usris.search import SearchParams

FAST = SearchParams(neighbors=8, stage1_max_iters=6, stage2_max_iters=4)


def fast_config(**kw):
    kw.setdefault("p_max_w", (0.01, 0.02))
    kw.setdefault("search", FAST)
    return SystemConfig(**kw)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_single_point_dense_single_layer():
    cfg = fast_config(p_max_w=(0.1,), scale=0.03125)
    result = run_rate_sweep(cfg, names=("single_layer",))
    assert len(result.cells) == 1
    cell = result.cells[0]
    assert cell.rate > 0 and cell.topology == full_topology(architecture(cfg, "single_layer"))
    assert cell.rate == math.log2(1 + cell.snr)


def test_sweep_rows_and_rate_identity():
    result = run_rate_sweep(fast_config())
    assert len(result.cells) == 8
    for cell in result.cells:
        assert cell.rate == math.log2(1 + cell.snr)
        assert 0 < cell.ear <= 1
    # doubling the power never lowers any architecture's rate
    for name in ARCHITECTURES:
        (_, r0), (_, r1) = result.rates(name)
        assert r1 >= r0
    by_name = {c.architecture: c for c in result.cells if c.p_max == 0.02}
    assert by_name["foldable_sparse"].rate >= by_name["sparse_multilayer"].rate


def test_shared_stage_one_matches_separate_run():
    cfg = fast_config(p_max_w=(0.05,))
    shared = {c.architecture: c for c in run_cells(cfg, 0.05)}
    alone = run_cells(cfg, 0.05, names=("sparse_multilayer",))[0]
    assert alone.rate == shared["sparse_multilayer"].rate
    assert alone.topology == shared["sparse_multilayer"].topology


def test_write_sweep_files(tmp_path):
    cfg = fast_config()
    paths = write_sweep(run_rate_sweep(cfg, names=("multilayer",)), tmp_path)
    rows = read_csv(paths["csv"])
    assert list(rows[0]) == SWEEP_COLUMNS
    assert [float(r["p_max_watts"]) for r in rows] == [0.01, 0.02]
    doc = json.loads(paths["manifest"].read_text())
    assert doc["format_version"] == "usris-result/1"
    assert doc["config"]["physics"]["p_max_w"] == [0.01, 0.02]
    for entry in doc["results"]:
        assert entry["rate_bps_hz"] == math.log2(1 + entry["snr_linear"])
    assert parse_config(paths["config"]) == cfg


def test_timing_column_opt_in(tmp_path):
    result = run_rate_sweep(fast_config(p_max_w=(0.1,)), names=("single_layer",))
    result.write_csv(tmp_path / "t.csv", timing=True)
    assert list(read_csv(tmp_path / "t.csv")[0])[-1] == "runtime_s"


def test_sweep_byte_identical(tmp_path):
    cfg = fast_config()
    a = write_sweep(run_rate_sweep(cfg), tmp_path / "a")
    b = write_sweep(run_rate_sweep(cfg, threads=3), tmp_path / "b")
    for key in ("csv", "manifest", "config"):
        assert a[key].read_bytes() == b[key].read_bytes()


def test_ear_study_outputs(tmp_path):
    cfg = fast_config()
    study = run_ear_study(cfg)
    files = [p.name for p in write_ear_study(study, tmp_path / "a")]
    assert sorted(f for f in files if f.startswith("heatmap_dense")) == [
        "heatmap_dense_layer1.csv", "heatmap_dense_layer2.csv"]
    assert sorted(f for f in files if f.startswith("heatmap_foldable")) == [
        f"heatmap_foldable_layer{l}.csv" for l in (1, 2, 3)]
    # dense EAR runs over every location, sparse over the budget only
    assert study.dense_map.active.sum() == 32
    assert study.foldable_map.active.sum() == 32 and study.foldable_map.active.size == 48
    rows = read_csv(tmp_path / "a" / "heatmap_foldable_layer2.csv")
    assert len(rows) == 16
    assert sum(int(r["active"]) for r in rows) == study.foldable_map.active[1].sum()
    write_ear_study(run_ear_study(cfg), tmp_path / "b")
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_ordering_check_single_seed():
    out = ordering_check(fast_config(), seed=3)
    assert out.ordered
    assert out.foldable >= out.sparse >= out.dense_embedded > 0


def test_rescaled_snr_scale_law():
    cfg = fast_config()
    arch = architecture(cfg, "multilayer")
    scen = build_scenario(cfg, arch, 0.01)
    topo = full_topology(arch)
    sol = scen.solve(topo, FLAT)
    for gamma in (0.5, 2.0, 10.0):
        assert rescaled_snr(scen, topo, FLAT, sol, gamma) == pytest.approx(gamma * sol.snr, rel=1e-10)


# ---- command line ---------------------------------------------------------

@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    dump_config(fast_config(), path)
    return path


def test_cli_sweep_threads_identical(tmp_path, cfg_file):
    assert main(["sweep", "--config", str(cfg_file), "--out", str(tmp_path / "a")]) == 0
    assert main(["--threads", "4", "sweep", "--config", str(cfg_file), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert len(read_csv(tmp_path / "a" / "sweep.csv")) == 8


def test_cli_seed_override_echoed(tmp_path, cfg_file):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg_file), "--seed", "17", "--architectures", "single_layer",
                 "--out", str(out)]) == 0
    assert parse_config(out / "config.yaml").seed == 17
    assert {r["seed"] for r in read_csv(out / "sweep.csv")} == {"17"}


def test_cli_optimize(tmp_path, cfg_file):
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(cfg_file), "--p-max", "0.5", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"topology.txt", "fold.json", "solution.json", "stage1_trace.csv", "stage2_trace.csv"} <= names
    bits = [int(b) for line in (out / "topology.txt").read_text().splitlines()
            if not line.startswith("#") for b in line.split()]
    assert len(bits) == 48 and sum(bits) == 32
    header = (out / "stage1_trace.csv").read_text().splitlines()[0]
    assert header == "iter,best_candidate_rate,best_so_far_rate,evaluated,tabu_hits,aspiration_fired"


def test_cli_ear(tmp_path, cfg_file):
    out = tmp_path / "e"
    assert main(["ear", "--config", str(cfg_file), "--out", str(out)]) == 0
    report = (out / "ear_report.txt").read_text()
    assert "[dense_multilayer]" in report and "layer3_ear" in report


def test_cli_geometry_and_channels(tmp_path):
    assert main(["geometry", "--fold", "2", "0", "--out", str(tmp_path / "g")]) == 0
    rows = read_csv(tmp_path / "g" / "geometry.csv")
    assert len(rows) == 48
    assert main(["channels", "--architecture", "multilayer", "--out", str(tmp_path / "c")]) == 0
    assert sorted(p.name for p in (tmp_path / "c").iterdir()) == ["g.txt", "h1.txt", "h2.txt"]
    assert (tmp_path / "c" / "g.txt").read_text().splitlines()[0] == "16 8"


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("foo: 1\n")
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "foo" in capsys.readouterr().err
    assert main(["geometry", "--scale", "0.3", "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["geometry", "--fold", "5", "0", "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    big = tmp_path / "big.yaml"
    big.write_text("layout:\n  n_active: 1000\n")
    assert main(["optimize", "--config", str(big), "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_cli_degenerate_exit(tmp_path):
    # two active elements cannot cover three layers, so every candidate cuts the cascade
    path = tmp_path / "cfg.yaml"
    dump_config(fast_config(n_active=16), path)
    assert main(["optimize", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_DEGENERATE


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
