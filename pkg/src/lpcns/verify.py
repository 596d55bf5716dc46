"""Property suite behind ``lpcns verify``.

Every check returns a :class:`PropertyResult`; :func:`verify_suite` bundles
them into a JSON-serialisable report. Nothing here reads the clock, so two
invocations with the same arguments produce identical bytes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .heat import heat_solve, parabolic_regularity_check
from .initial import InitialConditionSpec, generate_initial, random_smooth_field
from .littlewood_paley import bernstein_check, get_bank
from .model import CFLWarning, ModelParams, ScalingLossWarning, State, run, scale_transform
from .monitor import MonitorConfig, budget_residual
from .spectral import (
    SpectralField,
    TorusGrid,
    fft_array,
    gradient,
    leray_project,
    make_grid,
)


@dataclass
class PropertyResult:
    name: str
    passed: bool
    value: float
    threshold: str
    detail: dict = field(default_factory=dict)


# the nonlinear run used for the budget-convergence property
STANDARD_RUN = {
    "dim": 2, "n": 16, "amplitude": 1.0, "seed": 1, "kmax": 4, "decay": 0.5,
    "t_end": 0.1, "dt": 0.004,
}


def random_spectral(grid: TorusGrid, rng: np.random.Generator, components: int = 1,
                    kmax: int | None = None) -> SpectralField:
    """Real, zero-mean random field with modes ``|k_i| <= kmax`` (default: the cutoff)."""
    kmax = grid.cutoff if kmax is None else kmax
    vals = rng.standard_normal((components,) + grid.shape)
    coef = fft_array(grid, vals)
    keep = np.all(np.abs(grid.k) <= kmax, axis=0) & (grid.ksq > 0)
    return SpectralField(grid, coef * keep)


def band_limited_shell(grid: TorusGrid, rng: np.random.Generator, q: int) -> SpectralField:
    """Random real field whose spectrum lies in the support of shell ``q``.

    Coefficients are drawn on the lattice ``|k_i| < 2^(q+1)`` independently of
    the grid, so one seed gives the same function on every grid resolving it.
    """
    lam = 2.0**q
    K = 2 ** (q + 1) - 1
    if K >= grid.n // 2:
        raise ValueError(f"shell {q} is not resolved on N={grid.n}")
    side = 2 * K + 1
    z = rng.standard_normal((side,) * grid.dim) + 1j * rng.standard_normal((side,) * grid.dim)
    z = 0.5 * (z + np.conj(z[(slice(None, None, -1),) * grid.dim]))
    kk = np.meshgrid(*([np.arange(-K, K + 1)] * grid.dim), indexing="ij")
    kabs = np.sqrt(sum(k.astype(float) ** 2 for k in kk))
    keep = (kabs > 0.75 * lam) & (kabs < 2.0 * lam)
    coef = np.zeros(grid.shape, dtype=complex)
    coef[tuple(k[keep] % grid.n for k in kk)] = z[keep]
    return SpectralField(grid, coef[None])


# --- individual properties -------------------------------------------------

def partition_of_unity_error(grid: TorusGrid) -> float:
    bank = get_bank(grid)
    total = sum(bank.multiplier(q) for q in bank.shells)
    return float(np.max(np.abs(total - 1.0)))


def check_partition_of_unity(grids=((2, 16), (2, 32), (2, 64), (3, 16), (3, 32)),
                             tol: float = 1e-12) -> PropertyResult:
    errs = {f"{d}d_n{n}": partition_of_unity_error(make_grid(d, n)) for d, n in grids}
    worst = max(errs.values())
    return PropertyResult("partition_of_unity", worst < tol, worst, f"< {tol:g}", errs)


def bernstein_constant(n: int, trials: int, seed: int, dim: int = 2,
                       shells=range(1, 4)) -> dict[int, float]:
    """Largest ``||u_q||_inf / (lambda_q^{d/2} ||u_q||_2)`` per shell over random trials."""
    grid = make_grid(dim, n)
    bank = get_bank(grid)
    out = {}
    for q in shells:
        rng = np.random.default_rng([seed, q])
        out[q] = max(bernstein_check(band_limited_shell(grid, rng, q), q, 2.0, np.inf, bank)
                     for _ in range(trials))
    return out


def check_bernstein(seed: int = 0, trials: int = 20, tol: float = 0.10) -> PropertyResult:
    a = bernstein_constant(32, trials, seed)
    b = bernstein_constant(64, trials, seed)
    ca, cb = max(a.values()), max(b.values())
    var = abs(ca - cb) / max(ca, cb)
    return PropertyResult("bernstein", var < tol, var, f"relative variation < {tol:g}",
                          {"constant_n32": ca, "constant_n64": cb})


def leray_errors(grid: TorusGrid, rng: np.random.Generator) -> tuple[float, float]:
    U = random_spectral(grid, rng, grid.dim)
    P = leray_project(U)
    idem = float(np.max(np.abs(leray_project(P).coef - P.coef)))
    phi = random_spectral(grid, rng)
    G = gradient(phi)
    annihil = float(np.max(np.abs(leray_project(G).coef))) / max(float(np.max(np.abs(G.coef))), 1e-300)
    return idem, annihil


def check_leray(n: int = 32, seed: int = 0, trials: int = 10, tol: float = 1e-12) -> PropertyResult:
    rng = np.random.default_rng([seed, 3])
    errs = [leray_errors(make_grid(2, n), rng) for _ in range(trials)]
    worst = max(max(e) for e in errs)
    return PropertyResult("leray", worst < tol, worst, f"< {tol:g}",
                          {"idempotence": max(e[0] for e in errs),
                           "gradient_annihilation": max(e[1] for e in errs)})


def heat_exactness_error(n: int = 32, seed: int = 0, t_end: float = 0.5, dt: float = 0.05) -> float:
    """Relative per-mode error of the c-equation alone (n = u = 0) against ``e^{-|k|^2 t}``."""
    grid = make_grid(2, n)
    rng = np.random.default_rng([seed, 4])
    C = random_spectral(grid, rng, kmax=4)
    zero = SpectralField.zeros(grid)
    s0 = State.from_spectral(0.0, zero, C, SpectralField.zeros(grid, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CFLWarning)
        final = run(s0, t_end, dt, ModelParams()).final
    exact = C.coef * np.exp(-grid.ksq * t_end)
    return float(np.max(np.abs(final.c_hat.coef - exact)) / np.max(np.abs(C.coef)))


def check_heat_exactness(n: int = 32, seed: int = 0, tol: float = 1e-12) -> PropertyResult:
    err = heat_exactness_error(n, seed)
    return PropertyResult("heat_exactness", err < tol, err, f"< {tol:g}")


def taylor_green_error(n: int = 32, t_end: float = 0.5, dt: float = 0.01) -> float:
    grid = make_grid(2, n)
    s0 = generate_initial(InitialConditionSpec("taylor_green", amplitude=1.0), grid)
    final = run(s0, t_end, dt, ModelParams()).final
    exact = s0.u.values * np.exp(-2.0 * t_end)
    return float(np.max(np.abs(final.u.values - exact)))


def check_taylor_green(n: int = 32, tol: float = 1e-8) -> PropertyResult:
    err = taylor_green_error(n)
    return PropertyResult("taylor_green", err < tol, err, f"< {tol:g}")


def parabolic_input(grid: TorusGrid, rng: np.random.Generator, t_end: float):
    """Random zero-mean initial data and a smooth time-dependent forcing."""
    kmax = int(rng.integers(1, 5))
    single = bool(rng.integers(0, 2))
    if single:
        kv = np.zeros(grid.dim, dtype=int)
        while not kv.any():
            kv = rng.integers(-kmax, kmax + 1, grid.dim)
        kv = kv.reshape((grid.dim,) + (1,) * grid.dim)
        mask = (np.all(grid.k == kv, axis=0) | np.all(grid.k == -kv, axis=0)).astype(complex)
        u0 = SpectralField(grid, 0.5 * mask[None])
        fa = SpectralField(grid, 0.5 * rng.standard_normal() * mask[None])
        fb = SpectralField(grid, 0.5 * rng.standard_normal() * mask[None])
    else:
        # drawn on the lattice |k_i| <= kmax, identical on every grid resolving it
        u0, fa, fb = (SpectralField(grid, random_smooth_field(grid, rng, 1, kmax, 0.5))
                      for _ in range(3))
    u0 = u0 * float(rng.uniform(0.0, 2.0))
    omega = float(rng.uniform(0.0, 10.0))

    def forcing(t):
        return fa * np.cos(omega * t) + fb * np.sin(omega * t)

    return u0, forcing


def parabolic_ratios(seed: int = 0, trials: int = 50, n: int = 16, t_end: float = 1.0,
                 dt: float = 2e-3, alphas=(-1.0, 0.0, 1.0)) -> np.ndarray:
    """Parabolic-regularity ratios, shape ``(trials, len(alphas))``."""
    grid = make_grid(2, n)
    rng = np.random.default_rng([seed, 5])
    out = np.zeros((trials, len(alphas)))
    for i in range(trials):
        u0, forcing = parabolic_input(grid, rng, t_end)
        traj = heat_solve(u0, forcing, t_end, dt)
        out[i] = [parabolic_regularity_check(traj, a).ratio for a in alphas]
    return out


def check_parabolic(seed: int = 0, trials: int = 10, bound: float = 1.05) -> PropertyResult:
    r = parabolic_ratios(seed, trials)
    worst = float(r.max())
    return PropertyResult("parabolic_regularity", worst <= bound, worst, f"<= {bound:g}",
                          {"alpha_-1": float(r[:, 0].max()), "alpha_0": float(r[:, 1].max()),
                           "alpha_1": float(r[:, 2].max())})


def standard_initial(run_cfg: dict = STANDARD_RUN) -> State:
    grid = make_grid(run_cfg["dim"], run_cfg["n"])
    spec = InitialConditionSpec("random_smooth", run_cfg["amplitude"], seed=run_cfg["seed"],
                                kmax=run_cfg["kmax"], decay=run_cfg["decay"])
    return generate_initial(spec, grid)


def budget_convergence(params: ModelParams, run_cfg: dict = STANDARD_RUN,
                       cfg: MonitorConfig | None = None) -> np.ndarray:
    """``max|residual|`` at dt over the same at dt/2, per field (n, c, u)."""
    cfg = cfg or MonitorConfig()
    s0 = standard_initial(run_cfg)
    maxima = []
    for dt in (run_cfg["dt"], run_cfg["dt"] / 2):
        traj = run(s0, run_cfg["t_end"], dt, params, keep_states=True)
        maxima.append(np.abs(budget_residual(traj, cfg, params)).max(axis=0))
    return maxima[0] / maxima[1]


def check_budget(params: ModelParams, lo: float = 3.0, hi: float = 5.0) -> PropertyResult:
    ratios = budget_convergence(params)
    ok = bool(np.all((ratios >= lo) & (ratios <= hi)))
    worst = float(ratios[np.argmax(np.abs(ratios - 4.0))])
    return PropertyResult("budget_residual_convergence", ok, worst, f"ratio in [{lo:g}, {hi:g}]",
                          {"ratio_n": float(ratios[0]), "ratio_c": float(ratios[1]),
                           "ratio_u": float(ratios[2])})


def _rel_l2(a: State, b: State) -> float:
    num = sum(np.sum((getattr(a, f).values - getattr(b, f).values) ** 2) for f in "ncu")
    den = sum(np.sum(getattr(b, f).values ** 2) for f in "ncu")
    return float(np.sqrt(num / den))


def scaling_roundtrip(n: int = 64, t_end: float = 0.2, dt: float = 0.01, lam: int = 2,
                      amplitude: float = 0.5) -> tuple[float, float]:
    """(round-trip discrepancy, integrator error) in relative L2.

    Gravity enters the velocity equation without derivatives, so the rescaled
    problem is simulated with gravity multiplied by ``lam``.
    """
    grid = make_grid(2, n)
    p = ModelParams()
    s0 = generate_initial(InitialConditionSpec("single_mode", amplitude), grid)
    p_scaled = replace(p, grav=tuple(lam * g for g in p.gravity(2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScalingLossWarning)
        direct = run(s0, t_end, dt, p).final
        a = scale_transform(direct, lam)
        b = run(scale_transform(s0, lam), t_end / lam**2, dt / lam**2, p_scaled).final
    fine = run(s0, t_end, dt / 2, p).final
    return _rel_l2(b, a), _rel_l2(direct, fine)


def check_scaling(n: int = 32, factor: float = 10.0) -> PropertyResult:
    disc, integ = scaling_roundtrip(n)
    return PropertyResult("scaling_roundtrip", disc <= factor * integ, disc,
                          f"<= {factor:g} x integrator error",
                          {"integrator_error": integ})


# --- bundle -----------------------------------------------------------------

def verify_suite(n: int = 32, seed: int = 0, break_dealias: bool = False) -> dict:
    """Run every property; ``break_dealias`` switches off dealiasing in the integrator."""
    params = ModelParams(dealias=not break_dealias)
    results = [
        check_partition_of_unity(),
        check_bernstein(seed),
        check_leray(n, seed),
        check_heat_exactness(n, seed),
        check_taylor_green(n),
        check_parabolic(seed),
        check_budget(params),
        check_scaling(n),
    ]
    return {
        "grid": {"dim": 2, "n_per_axis": n},
        "seed": seed,
        "break_dealias": break_dealias,
        "passed": all(r.passed for r in results),
        "properties": [asdict(r) for r in results],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
