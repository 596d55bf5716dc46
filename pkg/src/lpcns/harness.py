"""Run orchestration, checkpoints and output files."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, config_text
from .initial import generate_initial
from .model import BlowUpError, ModelParams, State, run
from .monitor import (
    DiagnosticsRecord,
    Monitor,
    conservation_report,
    criterion_integral,
    diagnostics_csv,
    wavenumber_log_bound,
)
from .snapshot import SnapshotError, format_value, read_manifest, read_snapshot, write_manifest, write_snapshot
from .spectral import TorusGrid, make_grid

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_PROPERTY = 4

_FIELDS = ("n", "c", "u")


def checkpoint_save(s: State, path, params: ModelParams | None = None, dt: float | None = None,
                    seed: int | None = None, step: int | None = None) -> Path:
    """Write ``n.snap``, ``c.snap``, ``u.snap`` and ``manifest.txt`` into directory ``path``."""
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    for name in _FIELDS:
        write_snapshot(d / f"{name}.snap", getattr(s, name), s.time)
    params = params or ModelParams()
    manifest = {
        "dim": s.grid.dim,
        "n_per_axis": s.grid.n,
        "time": float(s.time),
        "dt": "none" if dt is None else float(dt),
        "chi": float(params.chi),
        "grav": tuple(params.gravity(s.grid.dim)),
        "seed": "none" if seed is None else seed,
        "step": 0 if step is None else step,
    }
    write_manifest(d / "manifest.txt", manifest)
    return d


def checkpoint_manifest(path) -> dict[str, str]:
    return read_manifest(Path(path) / "manifest.txt")


def checkpoint_load(path, grid: TorusGrid | None = None) -> State:
    """Load a checkpoint directory; ``grid`` (if given) must match the stored one."""
    d = Path(path)
    man = checkpoint_manifest(d)
    try:
        stored = make_grid(int(man["dim"]), int(man["n_per_axis"]))
    except (KeyError, ValueError) as exc:
        raise SnapshotError(f"bad checkpoint manifest: {exc}") from None
    if grid is not None and grid != stored:
        raise SnapshotError(f"checkpoint grid ({stored.dim}, {stored.n}) does not match "
                            f"({grid.dim}, {grid.n})")
    parts = {}
    for name in _FIELDS:
        f, t = read_snapshot(d / f"{name}.snap", stored)
        parts[name] = f
    return State(float(man["time"]), parts["n"], parts["c"], parts["u"])


@dataclass
class RunReport:
    exit_code: int
    status: str
    steps: int
    t_final: float
    records: list[DiagnosticsRecord] = field(repr=False)
    final_state: State | None = field(default=None, repr=False)
    csv_path: Path | None = None
    summary_path: Path | None = None
    checkpoint_path: Path | None = None
    message: str = ""
    summary: dict = field(default_factory=dict, repr=False)


def summarize(records: list[DiagnosticsRecord], cfg: RunConfig, status: str,
              steps: int, t_final: float) -> dict[str, object]:
    out: dict[str, object] = {"status": status, "steps": steps, "t_final": t_final}
    out.update({f"config.{k}": v for k, v in cfg.flat().items()})
    out["config.monitor.cadence"] = cfg.cadence
    if records:
        integral, fmax = criterion_integral(records)
        cons = conservation_report(records)
        res = np.array([[r.residual_n, r.residual_c, r.residual_u] for r in records[1:]])
        res_max = np.nanmax(np.abs(res), axis=0) if len(res) else np.zeros(3)
        out.update({
            "f_integral": integral,
            "f_max": fmax,
            "f_final": records[-1].f,
            "Q_u_max": max(r.Q_u for r in records),
            "Q_c_max": max(r.Q_c for r in records),
            "Q_u_final": records[-1].Q_u,
            "Q_c_final": records[-1].Q_c,
            "mass_initial": records[0].mass_n,
            "mass_drift_rel": cons.mass_drift_rel,
            "max_c_increase": cons.max_c_increase,
            "max_div_u": cons.max_div_u,
            "max_neg_n_frac": cons.max_neg_n_frac,
            "energy_u_final": float(cons.energy_u[-1]),
            "log_bound_ratio": wavenumber_log_bound(records, cfg.monitor).max_ratio,
            "residual_n_max_abs": float(res_max[0]),
            "residual_c_max_abs": float(res_max[1]),
            "residual_u_max_abs": float(res_max[2]),
        })
    # scaling-critical Sobolev indices for (n, u, c), documentation only
    out["critical_index_n"] = -0.5
    out["critical_index_u"] = 0.5
    out["critical_index_c"] = 1.5
    return out


def summary_text(summary: dict) -> str:
    lines = ["# run summary: flat key = value"]
    for k, v in summary.items():
        lines.append(f"{k} = {format_value(v) if v is not None else 'none'}")
    return "\n".join(lines) + "\n"


def run_simulation(cfg: RunConfig, initial: State | None = None, start_step: int = 0) -> RunReport:
    """Integrate with the monitor attached; write CSV, summary and final checkpoint.

    Blow-up still writes every diagnostic gathered before the failure and
    returns exit code 3.
    """
    grid = make_grid(cfg.grid.dim, cfg.grid.n_per_axis)
    if initial is None:
        if cfg.snapshot:
            initial = checkpoint_load(cfg.snapshot, grid)
        else:
            initial = generate_initial(cfg.initial, grid)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_text(cfg), encoding="utf-8")

    monitor = Monitor(grid, cfg.monitor, cfg.model, cfg.cadence, cfg.output.keep_spectra)
    every = cfg.output.checkpoint_every
    seed = None if cfg.snapshot else cfg.initial.seed

    def observer(state: State, step: int) -> None:
        # global step numbering, so resumed runs continue the CSV index
        monitor(state, start_step + step)
        if every and step and step % every == 0:
            checkpoint_save(state, out / "checkpoints" / f"step_{start_step + step:07d}",
                            cfg.model, cfg.integrator.dt, seed, start_step + step)

    status, code, message = "ok", EXIT_OK, ""
    t_end = max(cfg.integrator.t_end, initial.time)
    try:
        traj = run(initial, t_end, cfg.integrator.dt, cfg.model, observer,
                   cfl_limit=cfg.integrator.cfl_warn)
        final, steps = traj.final, traj.steps
    except BlowUpError as exc:
        status, code, message = "blowup", EXIT_BLOWUP, str(exc)
        log.warning("%s", exc)
        final = exc.trajectory.final if exc.trajectory else initial
        steps = exc.trajectory.steps if exc.trajectory else 0
    monitor.close()

    csv_path = out / "diagnostics.csv"
    csv_path.write_text(diagnostics_csv(monitor.records), encoding="utf-8")
    summary = summarize(monitor.records, cfg, status, steps, final.time)
    if status == "blowup":
        summary["blowup_message"] = message
    summary_path = out / "summary.txt"
    summary_path.write_text(summary_text(summary), encoding="utf-8")
    ckpt = checkpoint_save(final, out / "checkpoint", cfg.model, cfg.integrator.dt, seed,
                           start_step + steps)
    return RunReport(code, status, steps, final.time, monitor.records, final, csv_path,
                     summary_path, ckpt, message, summary)


def resume_simulation(cfg: RunConfig, checkpoint) -> RunReport:
    """Continue from a checkpoint directory to ``cfg.integrator.t_end``."""
    grid = make_grid(cfg.grid.dim, cfg.grid.n_per_axis)
    state = checkpoint_load(checkpoint, grid)
    man = checkpoint_manifest(checkpoint)
    step = int(man.get("step", "0")) if man.get("step", "0").isdigit() else 0
    if not math.isfinite(state.time):
        raise SnapshotError("checkpoint time is not finite")
    return run_simulation(cfg, initial=state, start_step=step)
