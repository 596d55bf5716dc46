import math
import warnings

import numpy as np
import pytest

from lpcns.config import build_config
from lpcns.harness import (
    EXIT_BLOWUP,
    EXIT_OK,
    checkpoint_load,
    checkpoint_manifest,
    checkpoint_save,
    resume_simulation,
    run_simulation,
)
from lpcns.initial import InitialConditionSpec, generate_initial
from lpcns.model import ModelParams
from lpcns.monitor import CSV_COLUMNS, read_diagnostics_csv
from lpcns.snapshot import SnapshotError, read_manifest
from lpcns.spectral import make_grid


def cfg_for(tmp_path, **items):
    base = {"grid.n_per_axis": "16", "output.dir": str(tmp_path / "out")}
    base.update({k.replace("__", "."): str(v) for k, v in items.items()})
    return build_config(base)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        g = make_grid(2, 16)
        s = generate_initial(InitialConditionSpec("random_smooth", 0.3, seed=4), g)
        checkpoint_save(s, tmp_path / "ck", ModelParams(chi=0.7), dt=0.01, seed=4, step=12)
        back = checkpoint_load(tmp_path / "ck")
        for f in "ncu":
            assert getattr(back, f).values.tobytes() == getattr(s, f).values.tobytes()
        man = checkpoint_manifest(tmp_path / "ck")
        assert man["chi"] == "0.7" and man["step"] == "12" and man["seed"] == "4"
        assert man["grav"] == "0.0, -1.0"

    def test_grid_mismatch(self, tmp_path):
        checkpoint_save(generate_initial(InitialConditionSpec("zero"), make_grid(2, 16)), tmp_path / "ck")
        with pytest.raises(SnapshotError):
            checkpoint_load(tmp_path / "ck", make_grid(2, 32))

    def test_truncated_field(self, tmp_path):
        checkpoint_save(generate_initial(InitialConditionSpec("zero"), make_grid(2, 16)), tmp_path / "ck")
        p = tmp_path / "ck" / "c.snap"
        p.write_bytes(p.read_bytes()[:100])
        with pytest.raises(SnapshotError):
            checkpoint_load(tmp_path / "ck")

    def test_bad_manifest(self, tmp_path):
        checkpoint_save(generate_initial(InitialConditionSpec("zero"), make_grid(2, 16)), tmp_path / "ck")
        (tmp_path / "ck" / "manifest.txt").write_text("dim = two\n")
        with pytest.raises(SnapshotError):
            checkpoint_load(tmp_path / "ck")


class TestRun:
    def test_zero_run(self, tmp_path):
        cfg = cfg_for(tmp_path, initial__preset="zero", integrator__dt=0.01, integrator__t_end=0.05)
        rep = run_simulation(cfg)
        assert rep.exit_code == EXIT_OK and rep.status == "ok" and rep.steps == 5
        rows = read_diagnostics_csv(rep.csv_path.read_text())
        assert len(rows) == 6
        for row in rows:
            for col in CSV_COLUMNS:
                if col in ("t", "step", "Lambda_u", "Lambda_c"):
                    continue
                assert row[col] == 0.0 or (col.startswith("residual") and math.isnan(row[col]))
            assert row["Lambda_u"] == row["Lambda_c"] == 1.0

    def test_outputs_written(self, tmp_path):
        cfg = cfg_for(tmp_path, integrator__dt=0.01, integrator__t_end=0.04,
                      output__checkpoint_every=2)
        rep = run_simulation(cfg)
        out = tmp_path / "out"
        for name in ("config.txt", "diagnostics.csv", "summary.txt", "checkpoint/manifest.txt",
                     "checkpoints/step_0000002/n.snap", "checkpoints/step_0000004/u.snap"):
            assert (out / name).is_file(), name
        summary = read_manifest(rep.summary_path)
        assert summary["status"] == "ok" and summary["steps"] == "4"
        assert float(summary["f_integral"]) >= 0
        assert summary["critical_index_c"] == "1.5"

    def test_heat_only(self, tmp_path):
        A, T = 0.5, 0.2
        cfg = cfg_for(tmp_path, initial__preset="heat_only", initial__amplitude=A,
                      integrator__dt=0.02, integrator__t_end=T)
        rep = run_simulation(cfg)
        for row in read_diagnostics_csv(rep.csv_path.read_text()):
            assert row["max_c"] == pytest.approx(1.0 + A * math.exp(-row["t"]), abs=1e-12)
        assert rep.summary["residual_c_max_abs"] < 1e-10

    def test_blowup(self, tmp_path):
        cfg = cfg_for(tmp_path, initial__amplitude=50, initial__kmax=4, initial__decay=0.3,
                      integrator__dt=0.5, integrator__t_end=100)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_simulation(cfg)
        assert rep.exit_code == EXIT_BLOWUP and rep.status == "blowup"
        rows = read_diagnostics_csv(rep.csv_path.read_text())
        assert len(rows) == rep.steps + 1 >= 2
        assert read_manifest(rep.summary_path)["status"] == "blowup"
        assert (tmp_path / "out" / "checkpoint" / "n.snap").is_file()

    def test_deterministic(self, tmp_path):
        texts = []
        for name in ("a", "b"):
            cfg = cfg_for(tmp_path / name, initial__seed=5, integrator__dt=0.01, integrator__t_end=0.05)
            run_simulation(cfg)
            texts.append((tmp_path / name / "out" / "diagnostics.csv").read_bytes())
        assert texts[0] == texts[1]

    def test_restart_equivalence(self, tmp_path):
        full = run_simulation(cfg_for(tmp_path / "full", initial__seed=6, integrator__dt=0.01,
                                      integrator__t_end=0.1, initial__amplitude=0.5))
        half = run_simulation(cfg_for(tmp_path / "half", initial__seed=6, integrator__dt=0.01,
                                      integrator__t_end=0.05, initial__amplitude=0.5))
        rest = resume_simulation(cfg_for(tmp_path / "rest", integrator__dt=0.01, integrator__t_end=0.1),
                                 half.checkpoint_path)
        assert rest.steps == 5 and rest.records[-1].step == 10
        for f in "ncu":
            a = getattr(full.final_state, f).values
            b = getattr(rest.final_state, f).values
            assert np.max(np.abs(a - b)) <= 1e-12
