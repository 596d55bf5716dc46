"""Chemotaxis-Navier-Stokes right-hand side and time integration.

Solved system on the periodic torus, with constant sensitivity ``chi``,
constant gravity vector ``grav`` and consumption ``f(c) = c``::

    n_t = lap n - u.grad n - chi div(n grad c)
    c_t = lap c - u.grad c - n c
    u_t = P(lap u - (u.grad) u + n grav),   div u = 0

``P`` is the Leray projector. The constant part ``mean(n) * grav`` of the
buoyancy is balanced by a uniform pressure gradient, so the mean velocity is
conserved. Nonlinear products use the 2/3 rule on inputs and outputs.

Time stepping is the integrating-factor Heun scheme: the Laplacian is
propagated exactly by ``exp(-|k|^2 dt)``, nonlinear terms by explicit RK2.
The canonical State is physical-space; every step starts from the FFT of
the stored samples so checkpoint restarts reproduce runs bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .spectral import (
    RealField,
    SpectralField,
    TorusGrid,
    fft_array,
    ifft_array,
    leray_array,
    to_spectral,
)

DIV_TOL = 1e-10


class BlowUpError(RuntimeError):
    """Non-finite values appeared during integration."""

    def __init__(self, time: float, trajectory: "Trajectory | None" = None):
        super().__init__(f"solution blew up at t={time:.6g}")
        self.time = time
        self.trajectory = trajectory


class CFLWarning(UserWarning):
    pass


class ScalingLossWarning(UserWarning):
    pass


class InformationLossError(ValueError):
    pass


def default_gravity(dim: int) -> tuple[float, ...]:
    return (0.0,) * (dim - 1) + (-1.0,)


@dataclass(frozen=True)
class ModelParams:
    """Constant chemotactic sensitivity and gravity vector.

    ``grav=None`` selects ``(0, ..., 0, -1)``. ``dealias=False`` is a debug
    mutation that disables the 2/3 rule in the integrator only.
    """

    chi: float = 1.0
    grav: tuple[float, ...] | None = None
    dealias: bool = True

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise ValueError("chi must be finite")
        if self.grav is not None:
            g = tuple(float(x) for x in self.grav)
            if not all(math.isfinite(x) for x in g):
                raise ValueError("grav must be finite")
            object.__setattr__(self, "grav", g)

    def gravity(self, dim: int) -> np.ndarray:
        g = default_gravity(dim) if self.grav is None else self.grav
        if len(g) != dim:
            raise ValueError(f"gravity has {len(g)} components, grid has dim {dim}")
        return np.asarray(g, dtype=float)


@dataclass(frozen=True, eq=False)
class State:
    """Solution triple ``(n, c, u)`` at one time instant."""

    time: float
    n: RealField
    c: RealField
    u: RealField

    def __post_init__(self):
        grid = self.n.grid
        if self.c.grid != grid or self.u.grid != grid:
            raise ValueError("n, c, u must share one grid")
        if self.n.components != 1 or self.c.components != 1:
            raise ValueError("n and c are scalar fields")
        if self.u.components != grid.dim:
            raise ValueError("u must have dim components")
        div = float(np.max(np.abs(np.sum(grid.kderiv * self.u_hat.coef, axis=0))))
        if div > DIV_TOL * max(1.0, float(np.abs(self.u_hat.coef).max())):
            raise ValueError(f"velocity is not divergence-free (max |k.u| = {div:.3e})")

    @property
    def grid(self) -> TorusGrid:
        return self.n.grid

    @cached_property
    def n_hat(self) -> SpectralField:
        return to_spectral(self.n)

    @cached_property
    def c_hat(self) -> SpectralField:
        return to_spectral(self.c)

    @cached_property
    def u_hat(self) -> SpectralField:
        return to_spectral(self.u)

    @classmethod
    def from_arrays(cls, grid: TorusGrid, time: float, n, c, u) -> "State":
        return cls(float(time), RealField(grid, n), RealField(grid, c), RealField(grid, u))

    @classmethod
    def from_spectral(cls, time: float, n_hat: SpectralField, c_hat: SpectralField,
                      u_hat: SpectralField) -> "State":
        grid = n_hat.grid
        return cls.from_arrays(grid, time, ifft_array(grid, n_hat.coef),
                               ifft_array(grid, c_hat.coef), ifft_array(grid, u_hat.coef))

    @classmethod
    def zeros(cls, grid: TorusGrid, time: float = 0.0) -> "State":
        return cls.from_arrays(grid, time, np.zeros(grid.shape), np.zeros(grid.shape),
                               np.zeros((grid.dim,) + grid.shape))


class Tendency(NamedTuple):
    n: SpectralField
    c: SpectralField
    u: SpectralField


def nonlinear_terms(grid: TorusGrid, nh: np.ndarray, ch: np.ndarray, uh: np.ndarray,
                    params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spectral nonlinear and forcing tendencies (everything except the Laplacian)."""
    mask = grid.dealias_mask if params.dealias else True
    if params.dealias:
        nh, ch, uh = nh * mask, ch * mask, uh * mask
    ik = 1j * grid.kderiv
    n = ifft_array(grid, nh[0])
    c = ifft_array(grid, ch[0])
    u = ifft_array(grid, uh)
    grad_c = ifft_array(grid, ik * ch[0])

    # divergence form; identical to the advective form for div-free u
    flux_n = u * n + params.chi * n * grad_c
    rn = -np.sum(ik * fft_array(grid, flux_n), axis=0)
    rc = -np.sum(ik * fft_array(grid, u * c), axis=0) - fft_array(grid, n * c)

    dim = grid.dim
    ru = np.empty_like(uh)
    uu = {}
    for i in range(dim):
        for j in range(i, dim):
            uu[i, j] = uu[j, i] = fft_array(grid, u[i] * u[j])
    g = params.gravity(dim)
    for i in range(dim):
        ru[i] = -sum(ik[j] * uu[i, j] for j in range(dim)) + g[i] * nh[0]
    ru = leray_array(grid, ru)
    ru[(slice(None),) + (0,) * dim] = 0.0

    if params.dealias:
        rn, rc, ru = rn * mask, rc * mask, ru * mask
    return rn[np.newaxis], rc[np.newaxis], ru


def rhs(s: State, p: ModelParams) -> Tendency:
    """Full tendency ``(dn/dt, dc/dt, du/dt)`` in spectral space."""
    grid = s.grid
    nh, ch, uh = s.n_hat.coef, s.c_hat.coef, s.u_hat.coef
    rn, rc, ru = nonlinear_terms(grid, nh, ch, uh, p)
    lap = -grid.ksq
    return Tendency(SpectralField(grid, rn + lap * nh),
                    SpectralField(grid, rc + lap * ch),
                    SpectralField(grid, ru + lap * uh))


def cfl_number(s: State, dt: float) -> float:
    umax = float(np.max(np.sqrt(np.sum(s.u.values**2, axis=0))))
    return dt * umax * s.grid.n / (2.0 * np.pi)


def check_cfl(s: State, dt: float, limit: float = 0.5) -> bool:
    """Warn and return False when ``dt max|u| N / 2pi`` exceeds ``limit``."""
    cfl = cfl_number(s, dt)
    if cfl > limit:
        warnings.warn(f"CFL number {cfl:.3f} exceeds {limit} at t={s.time:.6g}",
                      CFLWarning, stacklevel=3)
        return False
    return True


def step_imex(s: State, dt: float, p: ModelParams, cfl_limit: float | None = 0.5) -> State:
    """Advance one integrating-factor RK2 step.

    ``cfl_limit=None`` skips the CFL check.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = s.grid
    if cfl_limit is not None:
        check_cfl(s, dt, cfl_limit)
    decay = np.exp(-grid.ksq * dt)
    y0 = (s.n_hat.coef, s.c_hat.coef, s.u_hat.coef)
    with np.errstate(all="ignore"):
        r0 = nonlinear_terms(grid, *y0, p)
        stage = [decay * (y + dt * r) for y, r in zip(y0, r0)]
        stage[2] = leray_array(grid, stage[2])
        r1 = nonlinear_terms(grid, *stage, p)
        y1 = [decay * y + 0.5 * dt * (decay * a + b) for y, a, b in zip(y0, r0, r1)]
        y1[2] = leray_array(grid, y1[2])
        arrays = [ifft_array(grid, y) for y in y1]
    t1 = s.time + dt
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise BlowUpError(t1)
    return State.from_arrays(grid, t1, *arrays)


Observer = Callable[[State, int], None]


@dataclass
class Trajectory:
    """Step times, step sizes and (optionally) the visited states."""

    times: list[float] = field(default_factory=list)
    dts: list[float] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    initial: State | None = None
    final: State | None = None

    @property
    def steps(self) -> int:
        return len(self.dts)

    def append(self, s: State, dt: float | None, keep: bool) -> None:
        if self.times and not s.time > self.times[-1]:
            raise ValueError("trajectory times must increase strictly")
        self.times.append(s.time)
        if dt is not None:
            self.dts.append(dt)
        if keep:
            self.states.append(s)
        self.final = s


def step_schedule(t0: float, t_end: float, dt: float) -> list[float]:
    """Step sizes from ``t0`` to ``t_end``; the last one is shortened to land on ``t_end``."""
    span = t_end - t0
    if span <= 0:
        return []
    full = int(math.floor(span / dt + 1e-9))
    sched = [dt] * full
    rest = t_end - (t0 + full * dt)
    if rest > 1e-12 * max(1.0, abs(t_end)):
        sched.append(rest)
    return sched


def run(s0: State, t_end: float, dt: float, p: ModelParams,
        observer: Observer | None = None, keep_states: bool = False,
        cfl_limit: float = 0.5) -> Trajectory:
    """Integrate from ``s0`` to ``t_end``; ``observer(state, step)`` sees every state.

    The CFL warning is issued at most once per run. A blow-up raises
    :class:`BlowUpError` carrying the partial trajectory.
    """
    if t_end < s0.time:
        raise ValueError("t_end precedes the initial time")
    traj = Trajectory(initial=s0)
    traj.append(s0, None, keep_states)
    if observer is not None:
        observer(s0, 0)
    s = s0
    cfl_ok = True
    for i, h in enumerate(step_schedule(s0.time, t_end, dt), 1):
        if cfl_ok:
            cfl_ok = check_cfl(s, h, cfl_limit)
        try:
            s = step_imex(s, h, p, cfl_limit=None)
        except BlowUpError as exc:
            exc.trajectory = traj
            raise
        traj.append(s, h, keep_states)
        if observer is not None:
            observer(s, i)
    return traj


def _relabel(grid: TorusGrid, coef: np.ndarray, m: int) -> tuple[np.ndarray, float]:
    """Move ``coef[k]`` to ``2^m k``; return new coefficients and the largest dropped magnitude."""
    out = np.zeros_like(coef)
    k = grid.k.reshape(grid.dim, -1)
    src = coef.reshape(coef.shape[0], -1)
    if m >= 0:
        kn = k * (1 << m)
        keep = np.all(np.abs(kn) <= grid.cutoff, axis=0)
    else:
        d = 1 << (-m)
        keep = np.all(k % d == 0, axis=0)
        kn = k // d
    idx = np.ravel_multi_index(tuple(kn[:, keep] % grid.n), grid.shape)
    flat = out.reshape(out.shape[0], -1)
    flat[:, idx] = src[:, keep]
    dropped = np.abs(src[:, ~keep])
    return out, float(dropped.max()) if dropped.size else 0.0


def scale_transform(s: State, lam: float, strict: bool = False) -> State:
    """Apply ``n -> lam^2 n(lam x)``, ``c -> c(lam x)``, ``u -> lam u(lam x)``.

    The returned state carries time ``s.time / lam^2``. ``lam`` must be an
    integer power of two. Modes pushed outside the dealiased lattice (or, for
    ``lam < 1``, wavevectors not divisible by ``1/lam``) are discarded with a
    :class:`ScalingLossWarning`, or :class:`InformationLossError` if ``strict``.
    """
    m = math.log2(lam) if lam > 0 else float("nan")
    if not (math.isfinite(m) and m == round(m)):
        raise ValueError(f"lam must be a power of two, got {lam}")
    m = int(round(m))
    grid = s.grid
    fields = []
    worst = 0.0
    scale = 0.0
    for F, amp in ((s.n_hat, lam**2), (s.c_hat, 1.0), (s.u_hat, lam)):
        coef, lost = _relabel(grid, F.coef, m)
        worst = max(worst, lost)
        scale = max(scale, float(np.abs(F.coef).max()))
        fields.append(SpectralField(grid, amp * coef))
    if worst > 1e-13 * max(scale, 1e-300):
        msg = f"scaling by {lam} discarded modes of magnitude up to {worst:.3e}"
        if strict:
            raise InformationLossError(msg)
        warnings.warn(msg, ScalingLossWarning, stacklevel=2)
    return State.from_spectral(s.time / lam**2, *fields)
