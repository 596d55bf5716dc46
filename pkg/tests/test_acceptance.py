"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output) and then asserts, so the summary and the exit status agree.
"""

import math
import warnings

import numpy as np
import pytest

from lpcns.config import build_config
from lpcns.harness import resume_simulation, run_simulation
from lpcns.initial import InitialConditionSpec, generate_initial
from lpcns.littlewood_paley import get_bank, shell_norms
from lpcns.model import ModelParams, State, run
from lpcns.monitor import (
    Monitor,
    MonitorConfig,
    dissipation_wavenumber_c,
    dissipation_wavenumber_u,
    wavenumber_log_bound,
)
from lpcns.spectral import RealField, lp_norm_array, make_grid, max_divergence, to_spectral
from lpcns.verify import (
    STANDARD_RUN,
    check_bernstein,
    check_budget,
    check_heat_exactness,
    check_leray,
    check_partition_of_unity,
    check_taylor_green,
    parabolic_ratios,
    scaling_roundtrip,
    standard_initial,
)

CFG = MonitorConfig()


@pytest.fixture
def verdict(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert passed, detail
    return emit


def separation_ok(s: State) -> bool:
    """Both separation inequalities, evaluated shell by shell."""
    bank = get_bank(s.grid)
    _, q_u = dissipation_wavenumber_u(s.u_hat, CFG)
    _, q_c = dissipation_wavenumber_c(s.c_hat, CFG)
    nu = shell_norms(s.u_hat, bank)
    nc = shell_norms(s.c_hat, bank, r=CFG.r)
    for i, q in enumerate(nu.q):
        lam = 2.0**q
        if q > q_u and not nu.linf[i] / lam < CFG.C0:
            return False
        if q > q_c and not lam ** (3 / CFG.r) * nc.lr[i] < CFG.C0:
            return False
    return True


class StepChecker:
    """Observer checking divergence and separation at every step."""

    def __init__(self):
        self.max_div = 0.0
        self.separation = True
        self.steps = 0

    def __call__(self, s, step):
        self.max_div = max(self.max_div, max_divergence(s.u_hat))
        self.separation &= separation_ok(s)
        self.steps += 1


def test_criterion_01_partition_of_unity(verdict):
    r = check_partition_of_unity(tol=1e-12)
    verdict(1, "partition of unity", r.passed, f"max error {r.value:.2e} (< 1e-12)")


def test_criterion_02_bernstein(verdict):
    r = check_bernstein(seed=0, trials=100, tol=0.10)
    d = r.detail
    verdict(2, "Bernstein constant", r.passed,
            f"N=32 {d['constant_n32']:.5f}, N=64 {d['constant_n64']:.5f}, variation {r.value:.2%} (< 10%)")


def test_criterion_03_leray(verdict):
    r = check_leray(n=32, seed=0, trials=50, tol=1e-12)
    chk = StepChecker()
    s0 = standard_initial()
    run(s0, STANDARD_RUN["t_end"], STANDARD_RUN["dt"], ModelParams(), observer=chk)
    g = make_grid(2, 32)
    s1 = generate_initial(InitialConditionSpec("random_smooth", 1.0, seed=2), g)
    run(s1, 0.2, 0.005, ModelParams(), observer=chk)
    ok = r.passed and chk.max_div < 1e-10
    verdict(3, "Leray projector", ok,
            f"projector error {r.value:.2e} (< 1e-12); max div over {chk.steps} states {chk.max_div:.2e} (< 1e-10)")


def test_criterion_04_linear_exactness(verdict):
    heat = check_heat_exactness(n=32, tol=1e-12)
    tg = check_taylor_green(n=32, tol=1e-8)
    verdict(4, "linear exactness", heat.passed and tg.passed,
            f"heat {heat.value:.2e} (< 1e-12), Taylor-Green {tg.value:.2e} (< 1e-8)")


def test_criterion_05_parabolic_bound(verdict):
    ratios = parabolic_ratios(seed=0, trials=50, n=16)
    worst = float(ratios.max())
    verdict(5, "parabolic regularity bound", worst <= 1.05,
            f"max ratio {worst:.4f} over {ratios.shape[0]} inputs x alpha in (-1, 0, 1) (<= 1.05)")


def test_criterion_06_conservation(verdict):
    g = make_grid(2, 64)
    s0 = generate_initial(InitialConditionSpec("near_homogeneous_bacteria"), g)
    m0 = float(s0.n.values.sum())
    stats = {"drift": 0.0, "c_rise": 0.0, "prev": float(s0.c.values.max()), "sep": True, "div": 0.0}

    def observer(s, step):
        stats["drift"] = max(stats["drift"], abs(float(s.n.values.sum()) - m0) / abs(m0))
        cmax = float(s.c.values.max())
        stats["c_rise"] = max(stats["c_rise"], cmax - stats["prev"])
        stats["prev"] = cmax
        stats["div"] = max(stats["div"], max_divergence(s.u_hat))
        stats["sep"] &= separation_ok(s)

    traj = run(s0, 1.0, 1e-3, ModelParams(), observer=observer)
    ok = stats["drift"] < 1e-8 and stats["c_rise"] <= 1e-8 and stats["div"] < 1e-10 and stats["sep"]
    verdict(6, "conservation", ok,
            f"{traj.steps} steps, mass drift {stats['drift']:.2e} (< 1e-8), "
            f"max c rise per step {stats['c_rise']:.2e} (<= 1e-8), max div {stats['div']:.2e}")


def test_criterion_07_budget_residuals(verdict):
    r = check_budget(ModelParams(), lo=3.0, hi=5.0)
    ratios = ", ".join(f"{k} {r.detail['ratio_' + k]:.3f}" for k in "ncu")
    verdict(7, "budget residual convergence", r.passed, f"halving ratios {ratios} (4 +/- 25%)")


def test_criterion_08_wavenumbers(verdict):
    results = []
    g = make_grid(2, 128)
    _, Y = g.coords()
    zero_u = to_spectral(RealField.zeros(g, 2))
    results.append(dissipation_wavenumber_u(zero_u, CFG) == (1.0, 0))
    for amp, expected in ((4.0, (32.0, 5)), (1.0, (1.0, 0))):
        u = to_spectral(RealField(g, np.stack([amp * np.sin(32 * Y), np.zeros(g.shape)])))
        results.append(dissipation_wavenumber_u(u, CFG) == expected)
    g = make_grid(2, 64)
    X, _ = g.coords()
    results.append(dissipation_wavenumber_c(to_spectral(RealField.zeros(g)), CFG) == (1.0, 0))
    base = np.cos(8 * X)
    for rho, expected in ((0.02, (8.0, 3)), (0.001, (1.0, 0))):
        c = to_spectral(RealField(g, base * rho / lp_norm_array(g, base[None], CFG.r)))
        results.append(dissipation_wavenumber_c(c, CFG) == expected)

    chk = StepChecker()
    run(standard_initial(), STANDARD_RUN["t_end"], STANDARD_RUN["dt"], ModelParams(), observer=chk)
    for seed in range(3):
        s0 = generate_initial(InitialConditionSpec("random_smooth", 2.0, seed=seed, kmax=8, decay=0.3),
                              make_grid(2, 32))
        run(s0, 0.1, 0.005, ModelParams(), observer=chk)
    ok = all(results) and chk.separation
    verdict(8, "dissipation wavenumbers", ok,
            f"{sum(results)}/{len(results)} examples exact; separation at all {chk.steps} states: {chk.separation}")


def test_criterion_09_scaling(verdict):
    disc, integ = scaling_roundtrip(n=64)
    verdict(9, "scaling round trip", disc <= 10 * integ,
            f"discrepancy {disc:.2e} vs 10 x integrator error {10 * integ:.2e}")


def _log_bound_battery(n):
    worst = 0.0
    for seed in range(20):
        g = make_grid(2, n)
        spec = InitialConditionSpec("random_smooth", 0.5 + 0.25 * seed, seed=seed, kmax=8, decay=0.3)
        mon = Monitor(g, CFG, ModelParams())
        run(generate_initial(spec, g), 0.05, 0.005, ModelParams(), observer=mon)
        mon.close()
        worst = max(worst, wavenumber_log_bound(mon.records, CFG).max_ratio)
    return worst


def test_criterion_10_log_bound(verdict):
    a, b = _log_bound_battery(32), _log_bound_battery(64)
    var = abs(a - b) / max(a, b)
    ok = math.isfinite(a) and math.isfinite(b) and var < 0.20
    verdict(10, "wavenumber log bound", ok, f"N=32 {a:.4f}, N=64 {b:.4f}, variation {var:.2%} (< 20%)")


def test_criterion_11_determinism_restart(verdict, tmp_path):
    def cfg(sub, t_end):
        return build_config({"grid.n_per_axis": "32", "initial.seed": "7", "initial.amplitude": "0.5",
                             "integrator.dt": "0.01", "integrator.t_end": str(t_end),
                             "output.dir": str(tmp_path / sub)})

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = run_simulation(cfg("a", 0.2))
        run_simulation(cfg("b", 0.2))
    same = all((tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
               for name in ("diagnostics.csv", "checkpoint/n.snap", "checkpoint/c.snap",
                            "checkpoint/u.snap", "checkpoint/manifest.txt"))

    def summary_without_dir(sub):
        # the two runs differ only in output.dir, which the summary records
        lines = (tmp_path / sub / "summary.txt").read_text().splitlines()
        return [x for x in lines if not x.startswith("config.output.dir")]

    same = same and summary_without_dir("a") == summary_without_dir("b")
    half = run_simulation(cfg("half", 0.1))
    rest = resume_simulation(cfg("rest", 0.2), half.checkpoint_path)
    diff = max(float(np.max(np.abs(getattr(a.final_state, f).values - getattr(rest.final_state, f).values)))
               for f in "ncu")
    ok = same and diff <= 1e-12 and rest.records[-1].step == a.records[-1].step
    verdict(11, "determinism and restart", ok,
            f"outputs byte-identical: {same}; restart max difference {diff:.2e} (<= 1e-12)")
