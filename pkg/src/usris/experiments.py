"""
Benchmark architectures and the experiments built on them: rate-vs-power
sweeps, EAR studies and the guaranteed-ordering check.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beamforming import snr
from .channel import ula_positions
from .config import SystemConfig, config_to_dict, dump_config
from .errors import ConfigError, InfeasibleBudgetError
from .geometry import FLAT, SurfaceSpec
from .metrics import EarReport, ear, power_map, rate_curve, write_heatmap_csv
from .scenario import Scenario
from .search import ActivationTopology, dense_reference_topology, joint_pipeline

FORMAT_VERSION = "usris-result/1"
ARCHITECTURES = ("single_layer", "multilayer", "sparse_multilayer", "foldable_sparse")
SWEEP_COLUMNS = ["architecture", "p_max_watts", "rate_bps_hz", "snr_linear", "seed", "ao_iterations"]


@dataclass(frozen=True)
class Architecture:
    name: str
    layers: int
    rows: int
    cols: int
    n_active: int
    searched: bool
    foldable: bool

    @property
    def n_grid(self) -> int:
        return self.rows * self.cols

    @property
    def dense(self) -> bool:
        return not self.searched


def scale_grid(grid, scale: float) -> tuple:
    """Halve the larger grid side (rows on ties) once per factor of two in ``scale``."""
    rows, cols = int(grid[0]), int(grid[1])
    for _ in range(int(round(-math.log2(scale)))):
        if rows >= cols:
            rows //= 2
        else:
            cols //= 2
    if rows < 1 or cols < 2:
        raise ConfigError(f"scale {scale} shrinks grid {list(grid)} below 1 x 2", "layout.scale")
    return rows, cols


def reference_architectures(cfg: SystemConfig) -> list:
    s = cfg.scale
    single = scale_grid(cfg.single_layer_grid, s)
    multi = scale_grid(cfg.multilayer_grid, s)
    sparse = scale_grid(cfg.sparse_grid, s)
    n_active = int(round(cfg.n_active * s))
    total = cfg.sparse_layers * sparse[0] * sparse[1]
    if n_active > total:
        raise InfeasibleBudgetError(f"budget {n_active} exceeds the {total} sparse grid locations")
    return [
        Architecture("single_layer", 1, *single, single[0] * single[1], False, False),
        Architecture("multilayer", cfg.multilayer_layers, *multi,
                     cfg.multilayer_layers * multi[0] * multi[1], False, False),
        Architecture("sparse_multilayer", cfg.sparse_layers, *sparse, n_active, True, False),
        Architecture("foldable_sparse", cfg.sparse_layers, *sparse, n_active, True, True),
    ]


def architecture(cfg: SystemConfig, name: str) -> Architecture:
    for arch in reference_architectures(cfg):
        if arch.name == name:
            return arch
    raise ConfigError(f"unknown architecture {name!r}; choose from {ARCHITECTURES}")


def build_scenario(cfg: SystemConfig, arch: Architecture, p_max: float | None = None) -> Scenario:
    lam = cfg.wavelength
    spec = SurfaceSpec(arch.layers, arch.rows, arch.cols, cfg.pitch, cfg.layer_spacing_m,
                       origin=tuple(cfg.user_position_m))
    user = ula_positions(cfg.user_antennas, cfg.user_position_m, cfg.antenna_spacing)
    bs = ula_positions(cfg.bs_antennas, cfg.bs_position_m, cfg.antenna_spacing)
    return Scenario(spec, user, bs, lam, cfg.penetration_loss, cfg.noise_power_w,
                    p_max if p_max is not None else max(cfg.p_max_w), cfg.ao)


def full_topology(arch: Architecture) -> ActivationTopology:
    return ActivationTopology(arch.layers, arch.n_grid, tuple(range(arch.layers * arch.n_grid)))


@contextmanager
def evaluator_map(threads: int):
    """``map`` replacement that fans candidate evaluations out to a thread pool."""
    if threads is None or threads <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool.map


@dataclass
class CellResult:
    architecture: str
    p_max: float
    rate: float
    snr: float
    seed: int
    ao_iterations: int
    topology: ActivationTopology
    fold: tuple
    ear: float
    runtime: float = 0.0

    def row(self, timing: bool = False) -> dict:
        row = {"architecture": self.architecture, "p_max_watts": repr(self.p_max),
               "rate_bps_hz": repr(self.rate), "snr_linear": repr(self.snr), "seed": self.seed,
               "ao_iterations": self.ao_iterations}
        if timing:
            row["runtime_s"] = f"{self.runtime:.3f}"
        return row

    def manifest(self) -> dict:
        return {"architecture": self.architecture, "p_max_watts": self.p_max, "rate_bps_hz": self.rate,
                "snr_linear": self.snr, "seed": self.seed, "ao_iterations": self.ao_iterations,
                "active_indices": list(self.topology.active), "fold_rad": list(self.fold), "ear": self.ear}


@dataclass
class ExperimentResult:
    config: SystemConfig
    cells: list = field(default_factory=list)

    def sorted_cells(self) -> list:
        order = {name: i for i, name in enumerate(ARCHITECTURES)}
        return sorted(self.cells, key=lambda c: (order.get(c.architecture, 99), c.p_max))

    def rates(self, name: str) -> list:
        return [(c.p_max, c.rate) for c in self.sorted_cells() if c.architecture == name]

    def write_csv(self, path, timing: bool = False) -> None:
        cols = SWEEP_COLUMNS + (["runtime_s"] if timing else [])
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, cols, lineterminator="\n")
            writer.writeheader()
            for cell in self.sorted_cells():
                writer.writerow(cell.row(timing))

    def write_manifest(self, path) -> None:
        doc = {"format_version": FORMAT_VERSION, "config": config_to_dict(self.config),
               "results": [c.manifest() for c in self.sorted_cells()]}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


def _ear_of(scenario, topo, fold, sol, tau) -> float:
    ctx = scenario.context(topo, fold).with_theta(sol.theta)
    return ear(power_map(ctx, sol.w), tau=tau).global_ear


def _initial_topology(cfg, arch):
    if cfg.stage1_init == "dense":
        return dense_reference_topology(arch.layers, arch.rows, arch.cols, arch.n_active)
    return None


def run_cells(cfg: SystemConfig, p_max: float, threads: int = 1, names=ARCHITECTURES) -> list:
    """All requested architectures at one transmit power."""
    cells = []
    archs = {a.name: a for a in reference_architectures(cfg)}
    tau = cfg.ear_threshold
    with evaluator_map(threads) as map_fn:
        for name in ("single_layer", "multilayer"):
            if name not in names:
                continue
            arch = archs[name]
            t0 = time.perf_counter()
            scen = build_scenario(cfg, arch, p_max)
            topo = full_topology(arch)
            sol = scen.solve(topo, FLAT)
            cells.append(CellResult(name, p_max, sol.rate, sol.snr, cfg.seed, sol.iterations, topo,
                                    (0.0, 0.0), _ear_of(scen, topo, FLAT, sol, tau),
                                    time.perf_counter() - t0))
        wanted = [n for n in ("sparse_multilayer", "foldable_sparse") if n in names]
        if not wanted:
            return cells
        arch = archs["foldable_sparse"]
        scen = build_scenario(cfg, arch, p_max)
        init = _initial_topology(cfg, arch)
        # with a single outer loop the foldable pipeline's stage 1 *is* the sparse run
        shared = cfg.search.outer_loops == 1 and len(wanted) == 2
        t0 = time.perf_counter()
        if "sparse_multilayer" in wanted and not shared:
            res = joint_pipeline(scen, arch.n_active, cfg.fold_angles, cfg.search, cfg.seed, init,
                                 fold_stage=False, map_fn=map_fn)
            cells.append(CellResult("sparse_multilayer", p_max, res.rate, res.solution.snr, cfg.seed,
                                    res.solution.iterations, res.topology, (0.0, 0.0),
                                    _ear_of(scen, res.topology, FLAT, res.solution, tau),
                                    time.perf_counter() - t0))
            t0 = time.perf_counter()
        if "foldable_sparse" in wanted:
            res = joint_pipeline(scen, arch.n_active, cfg.fold_angles, cfg.search, cfg.seed, init,
                                 fold_stage=True, map_fn=map_fn)
            elapsed = time.perf_counter() - t0
            if shared:
                s1 = scen.solve(res.topology, FLAT)
                cells.append(CellResult("sparse_multilayer", p_max, s1.rate, s1.snr, cfg.seed,
                                        s1.iterations, res.topology, (0.0, 0.0),
                                        _ear_of(scen, res.topology, FLAT, s1, tau), elapsed))
            cells.append(CellResult("foldable_sparse", p_max, res.rate, res.solution.snr, cfg.seed,
                                    res.solution.iterations, res.topology, res.fold.as_tuple(),
                                    _ear_of(scen, res.topology, res.fold, res.solution, tau), elapsed))
    return cells


def run_rate_sweep(cfg: SystemConfig, threads: int = 1, names=ARCHITECTURES) -> ExperimentResult:
    result = ExperimentResult(cfg)
    for p in cfg.p_max_w:
        result.cells.extend(run_cells(cfg, float(p), threads, names))
    return result


def write_sweep(result: ExperimentResult, out_dir, timing: bool = False) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "sweep.csv", "manifest": out / "results.json", "config": out / "config.yaml"}
    result.write_csv(paths["csv"], timing)
    result.write_manifest(paths["manifest"])
    dump_config(result.config, paths["config"])
    return paths


@dataclass
class EarStudy:
    dense: EarReport
    foldable: EarReport
    dense_map: object
    foldable_map: object
    dense_arch: Architecture
    foldable_arch: Architecture
    foldable_rate: float
    dense_rate: float


def run_ear_study(cfg: SystemConfig, p_max: float | None = None, threads: int = 1) -> EarStudy:
    """Dense two-layer surface vs optimized foldable sparse surface on the same physics."""
    p_max = max(cfg.p_max_w) if p_max is None else p_max
    archs = {a.name: a for a in reference_architectures(cfg)}
    dense_arch, fold_arch = archs["multilayer"], archs["foldable_sparse"]

    scen = build_scenario(cfg, dense_arch, p_max)
    topo = full_topology(dense_arch)
    sol = scen.solve(topo, FLAT)
    dense_map = power_map(scen.context(topo, FLAT).with_theta(sol.theta), sol.w)

    scen_f = build_scenario(cfg, fold_arch, p_max)
    with evaluator_map(threads) as map_fn:
        res = joint_pipeline(scen_f, fold_arch.n_active, cfg.fold_angles, cfg.search, cfg.seed,
                             _initial_topology(cfg, fold_arch), map_fn=map_fn)
    fold_map = power_map(scen_f.context(res.topology, res.fold).with_theta(res.solution.theta),
                         res.solution.w)
    tau = cfg.ear_threshold
    return EarStudy(ear(dense_map, tau=tau), ear(fold_map, tau=tau), dense_map, fold_map,
                    dense_arch, fold_arch, res.rate, sol.rate)


def write_ear_study(study: EarStudy, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for label, pmap, arch in (("dense", study.dense_map, study.dense_arch),
                              ("foldable", study.foldable_map, study.foldable_arch)):
        for layer in range(1, pmap.layers + 1):
            path = out / f"heatmap_{label}_layer{layer}.csv"
            write_heatmap_csv(pmap, layer, arch.cols, path)
            written.append(path)
    report = out / "ear_report.txt"
    with open(report, "w") as fh:
        fh.write("[dense_multilayer]\n")
        fh.write(f"rate_bps_hz = {study.dense_rate!r}\n")
        fh.write(study.dense.as_text())
        fh.write("\n[foldable_sparse]\n")
        fh.write(f"rate_bps_hz = {study.foldable_rate!r}\n")
        fh.write(study.foldable.as_text())
    written.append(report)
    return written


@dataclass
class OrderingOutcome:
    seed: int
    dense_embedded: float
    sparse: float
    foldable: float

    @property
    def ordered(self) -> bool:
        return self.foldable >= self.sparse >= self.dense_embedded


def ordering_check(cfg: SystemConfig, seed: int, p_max: float | None = None, threads: int = 1) -> OrderingOutcome:
    """Dense-seeded stage 1 plus flat-incumbent stage 2 on the sparse grid.

    The dense reference topology is evaluated on the same grid, so the
    three reported rates can only be ordered by best-so-far dominance.
    """
    arch = architecture(cfg, "foldable_sparse")
    scen = build_scenario(cfg, arch, p_max)
    init = dense_reference_topology(arch.layers, arch.rows, arch.cols, arch.n_active)
    with evaluator_map(threads) as map_fn:
        res = joint_pipeline(scen, arch.n_active, cfg.fold_angles, cfg.search, seed, init, map_fn=map_fn)
    return OrderingOutcome(seed, res.init_rate, res.stage1_rate, res.rate)


def optimize(cfg: SystemConfig, p_max: float | None = None, threads: int = 1):
    arch = architecture(cfg, "foldable_sparse")
    scen = build_scenario(cfg, arch, p_max)
    with evaluator_map(threads) as map_fn:
        res = joint_pipeline(scen, arch.n_active, cfg.fold_angles, cfg.search, cfg.seed,
                             _initial_topology(cfg, arch), map_fn=map_fn)
    return arch, scen, res


def write_topology(topo: ActivationTopology, rows: int, cols: int, path) -> None:
    z = topo.per_layer().reshape(topo.layers, rows, cols)
    with open(path, "w") as fh:
        for layer in range(topo.layers):
            fh.write(f"# layer {layer + 1}\n")
            for row in z[layer]:
                fh.write(" ".join(str(int(b)) for b in row) + "\n")


def rescaled_snr(scenario: Scenario, topo, fold, sol, gamma: float) -> float:
    """SNR of a fixed solution after scaling the transmit power by ``gamma``."""
    ctx = scenario.context(topo, fold).with_theta(sol.theta)
    return snr(ctx, np.sqrt(gamma) * sol.w, sol.v, scenario.noise_power)


def rate_curve_check(result: ExperimentResult, name: str) -> list:
    """Sorted (p_max, rate) series for one architecture; logs instead of raising on a drop."""
    points = result.rates(name)
    try:
        return rate_curve(points)
    except AssertionError as exc:
        logging.getLogger("usris").warning("%s: %s", name, exc)
        return rate_curve(points, check_monotone=False)
