"""Named initial-condition presets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import State
from .spectral import TorusGrid, fft_array, ifft_array, leray_array

PRESETS = ("zero", "heat_only", "single_mode", "taylor_green", "random_smooth",
           "near_homogeneous_bacteria")


@dataclass(frozen=True)
class InitialConditionSpec:
    """Preset name plus shape parameters.

    Random presets draw coefficients for ``|k_i| <= kmax`` in a fixed order,
    so a given seed yields the same modes on every grid that resolves them.
    Spectral amplitudes decay like ``exp(-decay |k|)``.
    """

    preset: str = "random_smooth"
    amplitude: float = 0.1
    seed: int = 0
    n_mean: float = 1.0
    c_mean: float = 1.0
    decay: float = 1.0
    kmax: int = 6

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if self.decay <= 0:
            raise ValueError("decay must be positive")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")


def random_smooth_field(grid: TorusGrid, rng: np.random.Generator, components: int,
                        kmax: int, decay: float) -> np.ndarray:
    """Real random field with zero mean, spectrum ``~exp(-decay |k|)``, ``|k_i| <= kmax``."""
    side = 2 * kmax + 1
    z = (rng.standard_normal((components,) + (side,) * grid.dim)
         + 1j * rng.standard_normal((components,) + (side,) * grid.dim))
    kk = np.arange(-kmax, kmax + 1)
    kvec = np.meshgrid(*([kk] * grid.dim), indexing="ij")
    kabs = np.sqrt(sum(k.astype(float) ** 2 for k in kvec))
    z *= np.exp(-decay * kabs)
    # z(-k) sits at the reversed index
    flip = z[(slice(None),) + (slice(None, None, -1),) * grid.dim]
    herm = 0.5 * (z + np.conj(flip))
    herm[(slice(None),) + (kmax,) * grid.dim] = 0.0
    keep = np.all([np.abs(k) <= grid.cutoff for k in kvec], axis=0)
    coef = np.zeros((components,) + grid.shape, dtype=complex)
    idx = tuple(k[keep] % grid.n for k in kvec)
    for c in range(components):
        coef[c][idx] = herm[c][keep]
    return coef


def _unit_max(values: np.ndarray) -> np.ndarray:
    mag = np.sqrt(np.sum(values**2, axis=0)).max()
    return values / mag if mag > 0 else values


def generate_initial(spec: InitialConditionSpec, grid: TorusGrid) -> State:
    x = grid.coords()
    zeros = np.zeros(grid.shape)
    A = spec.amplitude
    dim = grid.dim
    if spec.preset == "zero":
        return State.zeros(grid)
    if spec.preset == "heat_only":
        # n = u = 0 decouples c into a pure heat equation
        return State.from_arrays(grid, 0.0, zeros, spec.c_mean + A * np.sin(x[0]),
                                 np.zeros((dim,) + grid.shape))
    if spec.preset == "single_mode":
        u = np.zeros((dim,) + grid.shape)
        u[0] = A * np.sin(x[1])
        return State.from_arrays(grid, 0.0, spec.n_mean + A * np.cos(x[0]),
                                 spec.c_mean + A * np.sin(x[1]), u)
    if spec.preset == "taylor_green":
        u = np.zeros((dim,) + grid.shape)
        env = np.cos(x[2]) if dim == 3 else 1.0
        u[0] = A * np.sin(x[0]) * np.cos(x[1]) * env
        u[1] = -A * np.cos(x[0]) * np.sin(x[1]) * env
        return State.from_arrays(grid, 0.0, zeros, zeros, u)

    rng = np.random.default_rng(spec.seed)
    kmax = min(spec.kmax, grid.cutoff)
    pert_n = _unit_max(ifft_array(grid, random_smooth_field(grid, rng, 1, kmax, spec.decay)))
    if spec.preset == "near_homogeneous_bacteria":
        return State.from_arrays(grid, 0.0, spec.n_mean + A * pert_n,
                                 np.full(grid.shape, spec.c_mean), np.zeros((dim,) + grid.shape))
    pert_c = _unit_max(ifft_array(grid, random_smooth_field(grid, rng, 1, kmax, spec.decay)))
    uh = leray_array(grid, random_smooth_field(grid, rng, dim, kmax, spec.decay))
    u = _unit_max(ifft_array(grid, uh))
    # re-project after normalization roundoff
    u = ifft_array(grid, leray_array(grid, fft_array(grid, u)))
    return State.from_arrays(grid, 0.0, spec.n_mean + A * pert_n, spec.c_mean + A * pert_c, A * u)
