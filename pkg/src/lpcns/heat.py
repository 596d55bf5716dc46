"""Forced heat equation ``u_t - lap u = f`` and its parabolic-gain check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import step_schedule
from .spectral import SpectralField, sobolev_norm

Forcing = Callable[[float], SpectralField]


@dataclass
class HeatTrajectory:
    times: list[float] = field(default_factory=list)
    states: list[SpectralField] = field(default_factory=list)
    forcing: list[SpectralField] = field(default_factory=list)

    @property
    def final(self) -> SpectralField:
        return self.states[-1]


def heat_solve(u0: SpectralField, forcing: Forcing | None, t_end: float, dt: float,
               t0: float = 0.0) -> HeatTrajectory:
    """Exact linear propagation with trapezoidal treatment of the source::

        u(t+h) = e^{-|k|^2 h} u(t) + h/2 (e^{-|k|^2 h} f(t) + f(t+h))
    """
    grid = u0.grid
    zero = SpectralField.zeros(grid, u0.components)

    def source(t):
        if forcing is None:
            return zero
        f = forcing(t)
        if f.grid != grid or f.components != u0.components:
            raise ValueError("forcing does not match the initial data")
        return f

    traj = HeatTrajectory([t0], [u0], [source(t0)])
    t, u, f = t0, u0.coef, traj.forcing[0].coef
    for h in step_schedule(t0, t_end, dt):
        decay = np.exp(-grid.ksq * h)
        t += h
        f_next = source(t)
        u = decay * u + 0.5 * h * (decay * f + f_next.coef)
        f = f_next.coef
        traj.times.append(t)
        traj.states.append(SpectralField(grid, u))
        traj.forcing.append(f_next)
    return traj


def _trapz(values, times) -> float:
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))


@dataclass(frozen=True)
class ParabolicReport:
    alpha: float
    u_l2_h_alpha2_sq: float
    ut_l2_h_alpha_sq: float
    u0_norm: float
    f_norm: float
    ratio: float
    ratio_ut: float


def parabolic_regularity_check(traj: HeatTrajectory, alpha: float,
                               u0_norm: float | None = None,
                               f_norm: float | None = None) -> ParabolicReport:
    """Discrete ``||u||^2_{L2(0,T;H^{a+2})}`` and ``||u_t||^2_{L2(0,T;H^a)}`` against the data.

    Both ratios divide by ``||u0||^2_{H^{a+1}} + ||f||^2_{L2(0,T;H^a)}``.
    Norms default to values computed from the trajectory itself.
    """
    if not isinstance(traj, HeatTrajectory):
        raise TypeError("parabolic_regularity_check needs a trajectory from heat_solve")
    ksq = traj.states[0].grid.ksq
    u_sq = [sobolev_norm(u, alpha + 2) ** 2 for u in traj.states]
    ut_sq = [sobolev_norm(SpectralField(u.grid, -ksq * u.coef + f.coef), alpha) ** 2
             for u, f in zip(traj.states, traj.forcing)]
    if u0_norm is None:
        u0_norm = sobolev_norm(traj.states[0], alpha + 1)
    if f_norm is None:
        f_norm = np.sqrt(_trapz([sobolev_norm(f, alpha) ** 2 for f in traj.forcing], traj.times))
    u_int = _trapz(u_sq, traj.times)
    ut_int = _trapz(ut_sq, traj.times)
    denom = u0_norm**2 + f_norm**2
    ratio = u_int / denom if denom > 0 else 0.0
    ratio_ut = ut_int / denom if denom > 0 else 0.0
    return ParabolicReport(alpha, u_int, ut_int, float(u0_norm), float(f_norm), ratio, ratio_ut)
