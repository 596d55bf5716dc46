"""Dissipation wavenumbers, the low-mode functional and shell-energy budgets.

Weighted shell sums are evaluated per wavevector: for real fields
``sum_q lambda_q^{2s} int Delta_q g . Delta_q h dx`` equals
``(2pi)^dim sum_k W_s(k) Re(g_k conj h_k)`` with ``W_s = sum_q lambda_q^{2s} phi_q^2``
(see :meth:`DyadicBank.shell_weight`).

Budget balances, with the labeled transfer terms taken as signed
contributions to the right-hand side::

    1/2 dE_n/dt = -D_n + III + VI
    1/2 dE_c/dt = -D_c + II + V
    1/2 dE_u/dt = -D_u + I + IV

For the dealiased Galerkin system these hold exactly; residuals measure the
time discretization. Across a step the dissipation integral uses the
per-mode logarithmic mean, which is exact for pure exponential decay, and
the transfer terms use the trapezoidal rule.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .littlewood_paley import (
    DyadicBank,
    ShellNorms,
    besov_norm,
    get_bank,
    project_low,
    shell_norms,
)
from .model import ModelParams, State, Trajectory
from .spectral import (
    SpectralField,
    TorusGrid,
    fft_array,
    ifft_array,
    lp_norm_array,
    sobolev_norm,
)


class MonitorRangeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MonitorConfig:
    """Thresholds and exponents for the diagnostics.

    ``c_exponent`` is the numerator of the ``lambda^{c_exponent / r}`` weight in
    the oxygen wavenumber; it stays 3 in every dimension.
    """

    C0: float = 0.1
    r: float = 3.2
    s: float = -0.1
    eps: float = 0.0625
    c_exponent: float = 3.0

    def __post_init__(self):
        if not self.C0 > 0:
            raise ValueError(f"C0 must be positive, got {self.C0}")
        if not self.r >= 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    def range_warnings(self) -> list[str]:
        out = []
        r_hi = 3.0 / (1.0 - self.eps) if self.eps < 1 else math.inf
        if not (3.0 < self.r <= r_hi):
            out.append(f"r={self.r} outside admissible range (3, 3/(1-eps)) = (3, {r_hi:.6g})")
        if not (-0.5 < self.s < 0.0):
            out.append(f"s={self.s} outside (-1/2, 0)")
        if 1.0 + self.s > 0 and not self.r < 3.0 / (1.0 + self.s):
            out.append(f"r={self.r} not below 3/(1+s) = {3.0 / (1.0 + self.s):.6g}")
        return out

    def warn_ranges(self) -> list[str]:
        msgs = self.range_warnings()
        for m in msgs:
            warnings.warn(m, MonitorRangeWarning, stacklevel=2)
        return msgs


def first_quiet_shell(weighted: Sequence[float], C0: float) -> int:
    """Smallest ``q >= 0`` with ``weighted[p] < C0`` for every ``p > q``.

    ``weighted[p]`` is indexed by shell ``p = 0 .. q_max``.
    """
    for p in range(len(weighted) - 1, 0, -1):
        if weighted[p] >= C0:
            return p
    return 0


def _u_weighted(norms: ShellNorms) -> np.ndarray:
    # shells 0..q_max
    return norms.linf[1:] / norms.lam[1:]


def _c_weighted(norms: ShellNorms, cfg: MonitorConfig) -> np.ndarray:
    return norms.lam[1:] ** (cfg.c_exponent / cfg.r) * norms.lr[1:]


def dissipation_wavenumber_u(u: SpectralField, cfg: MonitorConfig,
                             bank: DyadicBank | None = None) -> tuple[float, int]:
    """``(Lambda_u, Q_u)`` from the ``2^{-p} ||u_p||_inf < C0`` condition."""
    bank = bank or get_bank(u.grid)
    q = first_quiet_shell(_u_weighted(shell_norms(u, bank)), cfg.C0)
    return 2.0**q, q


def dissipation_wavenumber_c(c: SpectralField, cfg: MonitorConfig,
                             bank: DyadicBank | None = None) -> tuple[float, int]:
    """``(Lambda_c, Q_c)`` from the ``2^{3p/r} ||c_p||_r < C0`` condition."""
    bank = bank or get_bank(c.grid)
    q = first_quiet_shell(_c_weighted(shell_norms(c, bank, r=cfg.r), cfg), cfg.C0)
    return 2.0**q, q


@dataclass(frozen=True)
class CriterionValue:
    f: float
    grad_c_part: float
    besov_u_part: float
    Lambda_u: float
    Q_u: int
    Lambda_c: float
    Q_c: int


def _criterion(u: SpectralField, c: SpectralField, Q_u: int, Q_c: int,
               bank: DyadicBank) -> tuple[float, float]:
    grid = u.grid
    c_low = project_low(c, Q_c, bank)
    grad = ifft_array(grid, 1j * grid.kderiv * c_low.coef[0])
    grad_c = lp_norm_array(grid, grad, np.inf) ** 2
    besov_u = besov_norm(project_low(u, Q_u, bank), 1.0, np.inf, bank)
    return grad_c, besov_u


def criterion_f(s: State, bank: DyadicBank | None, cfg: MonitorConfig) -> CriterionValue:
    """``||grad c_{<=Q_c}||_inf^2 + ||u_{<=Q_u}||_{B^1_{inf,inf}}`` and its parts."""
    bank = bank or get_bank(s.grid)
    lam_u, q_u = dissipation_wavenumber_u(s.u_hat, cfg, bank)
    lam_c, q_c = dissipation_wavenumber_c(s.c_hat, cfg, bank)
    g, b = _criterion(s.u_hat, s.c_hat, q_u, q_c, bank)
    return CriterionValue(g + b, g, b, lam_u, q_u, lam_c, q_c)


def _inner(grid: TorusGrid, weight: np.ndarray, g: np.ndarray, h: np.ndarray) -> float:
    return float(np.sum(weight * np.real(g * np.conj(h))) * grid.volume)


def _mode_energy(coef: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(coef) ** 2, axis=0)


def shell_energy(s: State, bank: DyadicBank | None, cfg: MonitorConfig) -> tuple[float, float, float]:
    """``(sum lambda^{2s}||n_q||^2, sum lambda^{2s+2}||c_q||^2, sum lambda^{2s+2}||u_q||^2)``."""
    bank = bank or get_bank(s.grid)
    grid = s.grid
    ws, ws1 = bank.shell_weight(cfg.s), bank.shell_weight(cfg.s + 1)
    return (float(np.sum(ws * _mode_energy(s.n_hat.coef)) * grid.volume),
            float(np.sum(ws1 * _mode_energy(s.c_hat.coef)) * grid.volume),
            float(np.sum(ws1 * _mode_energy(s.u_hat.coef)) * grid.volume))


def dissipation_terms(s: State, bank: DyadicBank | None, cfg: MonitorConfig) -> tuple[float, float, float]:
    """``(D_n, D_c, D_u)``: weighted shell sums of ``||grad f_q||_2^2``."""
    bank = bank or get_bank(s.grid)
    grid = s.grid
    ws, ws1 = bank.shell_weight(cfg.s), bank.shell_weight(cfg.s + 1)
    k2 = grid.ksq
    return (float(np.sum(ws * k2 * _mode_energy(s.n_hat.coef)) * grid.volume),
            float(np.sum(ws1 * k2 * _mode_energy(s.c_hat.coef)) * grid.volume),
            float(np.sum(ws1 * k2 * _mode_energy(s.u_hat.coef)) * grid.volume))


@dataclass(frozen=True)
class FluxTerms:
    I: float
    II: float
    III: float
    IV: float
    V: float
    VI: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.I, self.II, self.III, self.IV, self.V, self.VI)


def _products(s: State, p: ModelParams):
    """Dealiased spectral nonlinear products in advective form."""
    grid = s.grid
    mask = grid.dealias_mask
    ik = 1j * grid.kderiv
    nh, ch, uh = s.n_hat.coef[0] * mask, s.c_hat.coef[0] * mask, s.u_hat.coef * mask
    n, c, u = ifft_array(grid, nh), ifft_array(grid, ch), ifft_array(grid, uh)

    def spec(x):
        return fft_array(grid, x) * mask

    def adv(fh):
        return np.sum(u * ifft_array(grid, ik * fh), axis=0)

    u_grad_u = spec(np.stack([adv(uh[i]) for i in range(grid.dim)]))
    u_grad_c = spec(adv(ch))
    u_grad_n = spec(adv(nh))
    nc = spec(n * c)
    n_grad_c = ifft_array(grid, ik * ch) * n
    chemo = p.chi * np.sum(ik * spec(n_grad_c), axis=0)
    g = p.gravity(grid.dim)
    buoy = g[:, None] * nh.reshape(1, -1)
    buoy = buoy.reshape((grid.dim,) + grid.shape)
    buoy[(slice(None),) + (0,) * grid.dim] = 0.0
    return u_grad_u, u_grad_c, u_grad_n, nc, chemo, buoy


def flux_terms(s: State, bank: DyadicBank | None, cfg: MonitorConfig,
               p: ModelParams) -> FluxTerms:
    """Transfer terms I..VI.

    IV is the buoyancy work ``+sum lambda^{2s+2} int Delta_q((n - mean n) grav) . u_q``;
    the mean buoyancy is balanced by pressure, matching the integrator.
    """
    bank = bank or get_bank(s.grid)
    grid = s.grid
    ws, ws1 = bank.shell_weight(cfg.s), bank.shell_weight(cfg.s + 1)
    nh, ch, uh = s.n_hat.coef[0], s.c_hat.coef[0], s.u_hat.coef
    u_grad_u, u_grad_c, u_grad_n, nc, chemo, buoy = _products(s, p)
    return FluxTerms(
        I=-_inner(grid, ws1, u_grad_u, uh),
        II=-_inner(grid, ws1, u_grad_c, ch),
        III=-_inner(grid, ws, u_grad_n, nh),
        IV=_inner(grid, ws1, buoy, uh),
        V=-_inner(grid, ws1, nc, ch),
        VI=-_inner(grid, ws, chemo, nh),
    )


def transport_term_I12(u: SpectralField, bank: DyadicBank | None, cfg: MonitorConfig) -> float:
    """``-sum_q lambda_q^{2s+2} int (u_{<=q-2} . grad u_q) . u_q dx``; zero for div-free ``u``."""
    bank = bank or get_bank(u.grid)
    grid = u.grid
    mask = grid.dealias_mask
    ik = 1j * grid.kderiv
    uh = u.coef * mask
    total = 0.0
    for q in bank.shells:
        if q - 2 < -1:
            continue
        low = ifft_array(grid, project_low(SpectralField(grid, uh), q - 2, bank).coef)
        uq_hat = uh * bank.multiplier(q)
        uq = ifft_array(grid, uq_hat)
        grad = ifft_array(grid, ik[None] * uq_hat[:, None])  # [i, j] = d_j u_q,i
        transport = np.einsum("j...,ij...->i...", low, grad)
        lam = 2.0**q
        total -= lam ** (2 * cfg.s + 2) * float(np.sum(transport * uq) * grid.cell_volume)
    return total


def log_mean(e0: np.ndarray, e1: np.ndarray) -> np.ndarray:
    """Elementwise logarithmic mean; arithmetic mean where either value is not positive."""
    out = 0.5 * (e0 + e1)
    pos = (e0 > 0) & (e1 > 0)
    a, b = e0[pos], e1[pos]
    d = (b - a) / a
    ratio = np.ones_like(d)
    nz = d != 0
    ratio[nz] = d[nz] / np.log1p(d[nz])
    out[pos] = a * ratio
    return out


@dataclass
class PointDiagnostics:
    """Everything the monitor evaluates on one state."""

    time: float
    energies: tuple[float, float, float]
    dissipation: tuple[float, float, float]
    flux: FluxTerms
    mode_energy: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)


def point_diagnostics(s: State, bank: DyadicBank, cfg: MonitorConfig,
                      p: ModelParams) -> PointDiagnostics:
    return PointDiagnostics(
        s.time,
        shell_energy(s, bank, cfg),
        dissipation_terms(s, bank, cfg),
        flux_terms(s, bank, cfg, p),
        (_mode_energy(s.n_hat.coef), _mode_energy(s.c_hat.coef), _mode_energy(s.u_hat.coef)),
    )


def step_residual(a: PointDiagnostics, b: PointDiagnostics, bank: DyadicBank,
                  cfg: MonitorConfig) -> tuple[float, float, float]:
    """Budget residuals ``(n, c, u)`` over the step from ``a`` to ``b``."""
    dt = b.time - a.time
    if not dt > 0:
        raise ValueError("diagnostic points must be in increasing time order")
    grid = bank.grid
    ws, ws1 = bank.shell_weight(cfg.s), bank.shell_weight(cfg.s + 1)
    weights = (ws, ws1, ws1)
    pairs = (("III", "VI"), ("II", "V"), ("I", "IV"))
    out = []
    for i in range(3):
        dE = 0.5 * (b.energies[i] - a.energies[i]) / dt
        diss = float(np.sum(weights[i] * grid.ksq * log_mean(a.mode_energy[i], b.mode_energy[i]))
                     * grid.volume)
        transfer = sum(0.5 * (getattr(a.flux, t) + getattr(b.flux, t)) for t in pairs[i])
        out.append(dE - (-diss + transfer))
    return tuple(out)


def budget_residual(traj: Trajectory, cfg: MonitorConfig, p: ModelParams,
                    bank: DyadicBank | None = None) -> np.ndarray:
    """Per-step residual triples, shape ``(steps, 3)``, from a run kept with ``keep_states``."""
    if len(traj.states) != len(traj.times) or len(traj.states) < 2:
        raise ValueError("trajectory lacks the per-step states needed for the budget")
    bank = bank or get_bank(traj.states[0].grid)
    pts = [point_diagnostics(s, bank, cfg, p) for s in traj.states]
    return np.array([step_residual(a, b, bank, cfg) for a, b in zip(pts[:-1], pts[1:])])


CSV_COLUMNS = (
    "t", "Lambda_u", "Q_u", "Lambda_c", "Q_c", "f", "f_grad_c_part", "f_besov_u_part",
    "f_integral_to_t", "I", "II", "III", "IV", "V", "VI", "D_n", "D_c", "D_u",
    "residual_n", "residual_c", "residual_u", "mass_n", "max_c", "energy_u", "neg_n_frac",
)
EXTRA_COLUMNS = ("step", "E_n", "E_c", "E_u", "u_norm_hs1", "max_div_u")


@dataclass
class DiagnosticsRecord:
    t: float
    Lambda_u: float
    Q_u: int
    Lambda_c: float
    Q_c: int
    f: float
    f_grad_c_part: float
    f_besov_u_part: float
    f_integral_to_t: float
    I: float
    II: float
    III: float
    IV: float
    V: float
    VI: float
    D_n: float
    D_c: float
    D_u: float
    residual_n: float
    residual_c: float
    residual_u: float
    mass_n: float
    max_c: float
    energy_u: float
    neg_n_frac: float
    step: int = 0
    E_n: float = 0.0
    E_c: float = 0.0
    E_u: float = 0.0
    u_norm_hs1: float = 0.0
    max_div_u: float = 0.0
    spectra: dict | None = field(default=None, repr=False)

    def row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS + EXTRA_COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def diagnostics_csv(records: Iterable[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + EXTRA_COLUMNS)
    for rec in records:
        w.writerow([_fmt(v) for v in rec.row()])
    return buf.getvalue()


def read_diagnostics_csv(text: str) -> list[dict[str, float]]:
    rows = csv.DictReader(io.StringIO(text))
    return [{k: float(v) for k, v in r.items()} for r in rows]


class Monitor:
    """Run observer producing a :class:`DiagnosticsRecord` every ``cadence`` steps.

    Call :meth:`close` after the run to record the final state when the step
    count is not a multiple of ``cadence``.
    """

    def __init__(self, grid: TorusGrid, cfg: MonitorConfig | None = None,
                 params: ModelParams | None = None, cadence: int = 1,
                 keep_spectra: bool = False, bank: DyadicBank | None = None):
        if cadence < 1:
            raise ValueError("cadence must be >= 1")
        self.grid = grid
        self.cfg = cfg or MonitorConfig()
        self.params = params or ModelParams()
        self.cadence = cadence
        self.keep_spectra = keep_spectra
        self.bank = bank or get_bank(grid)
        self.records: list[DiagnosticsRecord] = []
        self._prev: tuple[State, int] | None = None
        self._last: tuple[State, int] | None = None
        self._cache: dict[int, PointDiagnostics] = {}
        self._f_integral = 0.0

    def __call__(self, state: State, step: int) -> None:
        first = self._last is None
        self._prev, self._last = self._last, (state, step)
        if first or step % self.cadence == 0:
            self._record(state, step)

    def close(self) -> None:
        if self._last is not None and (not self.records or self.records[-1].step != self._last[1]):
            self._record(*self._last)

    def _point(self, state: State, step: int) -> PointDiagnostics:
        pt = self._cache.get(step)
        if pt is None:
            pt = point_diagnostics(state, self.bank, self.cfg, self.params)
            self._cache = {step: pt}
        return pt

    def _record(self, state: State, step: int) -> None:
        # states just before a blow-up can overflow the energy sums; inf is the honest value
        with np.errstate(over="ignore", invalid="ignore"):
            self._record_unchecked(state, step)

    def _record_unchecked(self, state: State, step: int) -> None:
        grid, bank, cfg = self.grid, self.bank, self.cfg
        nan3 = (math.nan,) * 3
        if step > 0 and self._prev is not None and self._prev[1] == step - 1:
            before = self._point(*self._prev)
            pt = self._point(state, step)
            res = step_residual(before, pt, bank, cfg)
        else:
            pt = self._point(state, step)
            res = nan3
        nu = shell_norms(state.u_hat, bank)
        nc = shell_norms(state.c_hat, bank, r=cfg.r)
        q_u = first_quiet_shell(_u_weighted(nu), cfg.C0)
        q_c = first_quiet_shell(_c_weighted(nc, cfg), cfg.C0)
        g, b = _criterion(state.u_hat, state.c_hat, q_u, q_c, bank)
        f = g + b
        if self.records:
            prev = self.records[-1]
            self._f_integral += 0.5 * (prev.f + f) * (state.time - prev.t)
        spectra = None
        if self.keep_spectra:
            spectra = {"n": shell_norms(state.n_hat, bank, r=cfg.r), "c": nc,
                       "u": shell_norms(state.u_hat, bank, r=cfg.r)}
        n = state.n.values[0]
        u = state.u.values
        self.records.append(DiagnosticsRecord(
            t=state.time, Lambda_u=2.0**q_u, Q_u=q_u, Lambda_c=2.0**q_c, Q_c=q_c,
            f=f, f_grad_c_part=g, f_besov_u_part=b, f_integral_to_t=self._f_integral,
            I=pt.flux.I, II=pt.flux.II, III=pt.flux.III, IV=pt.flux.IV, V=pt.flux.V,
            VI=pt.flux.VI, D_n=pt.dissipation[0], D_c=pt.dissipation[1], D_u=pt.dissipation[2],
            residual_n=res[0], residual_c=res[1], residual_u=res[2],
            mass_n=float(np.real(state.n_hat.coef[(0,) * (grid.dim + 1)]) * grid.volume),
            max_c=float(state.c.values.max()),
            energy_u=0.5 * float(np.sum(u * u) * grid.cell_volume),
            neg_n_frac=float(np.mean(n < 0)),
            step=step, E_n=pt.energies[0], E_c=pt.energies[1], E_u=pt.energies[2],
            u_norm_hs1=sobolev_norm(state.u_hat, cfg.s + 1),
            max_div_u=float(np.max(np.abs(np.sum(grid.kderiv * state.u_hat.coef, axis=0)))),
            spectra=spectra,
        ))


def _column(records: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in records], dtype=float)


def criterion_integral(records: Sequence[DiagnosticsRecord]) -> tuple[float, float]:
    """Trapezoidal ``int f dt`` over the record times, and ``max f``."""
    if not records:
        return 0.0, 0.0
    t, f = _column(records, "t"), _column(records, "f")
    integral = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t))) if len(t) > 1 else 0.0
    return integral, float(f.max())


@dataclass(frozen=True)
class LogBoundReport:
    max_ratio: float
    ratios: np.ndarray = field(repr=False)


def wavenumber_log_bound(records: Sequence[DiagnosticsRecord],
                         cfg: MonitorConfig | None = None) -> LogBoundReport:
    """``max_t Q_u / (1 + log2+ ||u||_{H^{s+1}})``."""
    q = _column(records, "Q_u")
    norm = _column(records, "u_norm_hs1")
    with np.errstate(divide="ignore"):
        logp = np.where(norm > 1.0, np.log2(np.maximum(norm, 1.0)), 0.0)
    ratios = q / (1.0 + logp)
    return LogBoundReport(float(ratios.max()) if len(ratios) else 0.0, ratios)


@dataclass(frozen=True)
class ConservationReport:
    mass_drift: float
    mass_drift_rel: float
    max_c_increase: float
    energy_u: np.ndarray = field(repr=False)
    max_neg_n_frac: float
    max_div_u: float


def conservation_report(records: Sequence[DiagnosticsRecord]) -> ConservationReport:
    mass = _column(records, "mass_n")
    maxc = _column(records, "max_c")
    drift = float(np.max(np.abs(mass - mass[0]))) if len(mass) else 0.0
    rel = drift / abs(mass[0]) if len(mass) and mass[0] != 0 else drift
    inc = float(np.max(np.diff(maxc), initial=0.0)) if len(maxc) > 1 else 0.0
    return ConservationReport(
        mass_drift=drift, mass_drift_rel=rel, max_c_increase=max(inc, 0.0),
        energy_u=_column(records, "energy_u"),
        max_neg_n_frac=float(_column(records, "neg_n_frac").max(initial=0.0)),
        max_div_u=float(_column(records, "max_div_u").max(initial=0.0)),
    )


def record_dict(rec: DiagnosticsRecord) -> dict:
    d = asdict(rec)
    d.pop("spectra", None)
    return d

