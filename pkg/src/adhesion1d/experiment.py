"""Run an ExperimentConfig and write its artifact bundle.

Bundle layout (all text, no timestamps, so identical inputs give identical bytes)::

    config.toml                        re-runnable config echo
    metadata.json                      echo + mass/CFL traces + file index
    pde_<model>_K<K>_step<n>.csv       x,u,drift,saturation
    sde_<model>_K<K>_step<n>.csv       x,u,drift,saturation on the histogram mesh
    sde_<model>_K<K>_trajectory.csv    t,particle_id,x
    compare.json                       PDE vs SDE distances (perspective both)
    plot_*.gp                          gnuplot scripts, one per panel
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_fields, default_bin_width, empirical_fields, histogram, metric_row
from .config import ExperimentConfig, steps_for
from .pde import PdeSolver
from .particles import SdeSimulator

log = logging.getLogger(__name__)

FMT = "%.17g"


@dataclass
class Bundle:
    directory: Path
    files: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _tag(cfg: ExperimentConfig, side: str) -> str:
    return f"{side}_{cfg.spec.kind.value}_K{cfg.spec.K:g}"


def write_csv(path: Path, columns: dict[str, np.ndarray]):
    data = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(columns), comments="")


def _dump_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def _gnuplot(path: Path, title: str, files: list[str], using: str, ylabel: str, style: str = "lines"):
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 'x'" if using.startswith("1:") else "set xlabel 't'",
        f"set ylabel '{ylabel}'",
    ]
    plots = [f"'{f}' using {using} with {style} title '{f}'" for f in files]
    lines.append("plot " + ", \\\n     ".join(plots))
    path.write_text("\n".join(lines) + "\n")


def run_pde_side(cfg: ExperimentConfig, out: Path, bundle: Bundle):
    scfg = cfg.solver_config()
    steps = [steps_for(t, scfg.dt) for t in cfg.pde_snapshot_times()]
    result = PdeSolver(scfg).run(snapshot_steps=steps)
    tag = _tag(cfg, "pde")
    files = []
    for snap in result.snapshots:
        name = f"{tag}_step{snap.step:08d}.csv"
        write_csv(out / name, {
            "x": scfg.grid.centers, "u": snap.density.values,
            "drift": snap.drift.values, "saturation": snap.saturation.values,
        })
        files.append(name)
    for col, label in ((2, "density"), (3, "drift"), (4, "saturation")):
        gp = f"plot_pde_{label}.gp"
        _gnuplot(out / gp, f"PDE {label}", files, f"1:{col}", label)
        bundle.files.append(gp)
    bundle.files.extend(files)
    bundle.metadata["pde"] = {
        "gamma": scfg.spec.gamma,
        "dt": scfg.dt,
        "n_steps": scfg.n_steps,
        "snapshots": [{"t": s.t, "step": s.step, "file": f} for s, f in zip(result.snapshots, files)],
        "mass": result.mass.tolist(),
        "max_mass_error": float(np.max(np.abs(result.mass - 1.0))),
        "min_density": float(result.min_value.min()),
        "cfl": result.cfl.tolist(),
    }
    return result


def run_sde_side(cfg: ExperimentConfig, out: Path, bundle: Bundle):
    scfg = cfg.sde_config()
    spec = scfg.effective_spec
    snap_steps = [steps_for(t, scfg.dt) for t in cfg.sde_snapshot_times()]
    stride = cfg.sde.trajectory_stride
    traj_steps = set(range(0, scfg.n_steps + 1, stride)) | set(snap_steps)
    run = SdeSimulator(scfg).run(snapshot_steps=traj_steps)
    tag = _tag(cfg, "sde")
    width = cfg.sde.bin_width or default_bin_width(spec, scfg.N)

    n_snap, N = run.positions.shape
    traj = f"{tag}_trajectory.csv"
    write_csv(out / traj, {
        "t": np.repeat(run.times, N),
        "particle_id": np.tile(run.final.stream_ids, n_snap),
        "x": run.positions.ravel(),
    })
    files = []
    fields_at = {}
    wanted = {0, *snap_steps}
    for k, step in enumerate(run.steps):
        if int(step) not in wanted:
            continue
        pos = run.positions[k]
        hist = histogram(pos, width, cfg.L)
        emp = empirical_fields(pos, spec, width, cfg.L)
        name = f"{tag}_step{int(step):08d}.csv"
        write_csv(out / name, {"x": hist.grid.centers, "u": hist.values, "drift": emp.drift, "saturation": emp.saturation})
        files.append(name)
        fields_at[int(step)] = (float(run.times[k]), hist, emp)
    for col, label in ((2, "histogram"), (3, "drift"), (4, "saturation")):
        gp = f"plot_sde_{label}.gp"
        _gnuplot(out / gp, f"SDE {label}", files, f"1:{col}", label, "steps" if col == 2 else "lines")
        bundle.files.append(gp)
    gp = "plot_sde_trajectories.gp"
    _gnuplot(out / gp, "SDE trajectories", [traj], "1:3", "x", "dots")
    bundle.files.extend([gp, traj, *files])
    bundle.metadata["sde"] = {
        "N": scfg.N,
        "dt": scfg.dt,
        "n_steps": scfg.n_steps,
        "a": spec.a,
        "bin_width": histogram(run.positions[0], width, cfg.L).width,
        "diffusion": scfg.diffusion,
        "snapshots": [{"t": fields_at[s][0], "step": s, "file": f} for s, f in zip(sorted(fields_at), files)],
        "trajectory": traj,
    }
    return [fields_at[s] for s in snap_steps]


def compare_report(cfg: ExperimentConfig, pde_result, sde_fields) -> list[dict]:
    rows = []
    pde_snaps = pde_result.snapshots[1:]
    for snap, (t_sde, hist, emp) in zip(pde_snaps, sde_fields):
        grid = snap.density.grid
        metrics = {"pde_time": snap.t}
        for key, a, b in (
            ("density", hist, snap.density),
            ("drift", (emp.grid, emp.drift), (grid, snap.drift.values)),
            ("saturation", (emp.grid, emp.saturation), (grid, snap.saturation.values)),
        ):
            d = compare_fields(a, b)
            metrics.update({f"{key}_{k}": v for k, v in d.items()})
        rows.append(metric_row(cfg.spec.kind.value, cfg.spec.K, cfg.sde.N, cfg.seed, t_sde, metrics))
    return rows


def run_experiment(cfg: ExperimentConfig, outdir) -> Bundle:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = Bundle(out)
    (out / "config.toml").write_text(cfg.to_toml())
    bundle.files.append("config.toml")
    bundle.metadata["version"] = __version__
    bundle.metadata["config"] = cfg.to_dict()
    pde_result = sde_fields = None
    if cfg.perspective in ("pde", "both"):
        log.info("%s: PDE run", cfg.name)
        pde_result = run_pde_side(cfg, out, bundle)
    if cfg.perspective in ("sde", "both"):
        log.info("%s: particle run", cfg.name)
        sde_fields = run_sde_side(cfg, out, bundle)
    if pde_result is not None and sde_fields is not None:
        rows = compare_report(cfg, pde_result, sde_fields)
        _dump_json(out / "compare.json", rows)
        bundle.files.append("compare.json")
        bundle.metadata["compare"] = "compare.json"
    bundle.metadata["files"] = sorted(bundle.files) + ["metadata.json"]
    _dump_json(out / "metadata.json", bundle.metadata)
    bundle.files.append("metadata.json")
    return bundle
