"""Periodic-torus discretization and Fourier-space operators.

The torus has period 2*pi on every axis, so wavevectors are integers. Fields
carry a leading component axis: scalars have one component, vectors ``dim``.
Spectral coefficients are normalized so that ``coef[k]`` multiplies
``exp(i k.x)``::

    f(x) = sum_k coef[k] exp(i k.x)

Odd-order derivatives zero the Nyquist plane (index ``N/2``); the Leray
projector uses the same wavevectors so its output stays real-valued.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid of ``n`` points per axis on the ``dim``-torus [0, 2pi)^dim.

    Attributes:
        dim: 2 or 3.
        n: points per axis, a power of two >= 8.
        k: integer wavevectors, shape ``(dim, n, ..., n)`` in FFT order with
            the Nyquist index labeled ``+n/2``.
        kderiv: float wavevectors used for first derivatives (Nyquist zeroed).
        ksq: ``|k|^2``.
        kabs: ``|k|``.
        cutoff: dealias cutoff ``n // 3``.
        dealias_mask: True where every ``|k_i| <= cutoff``.
    """

    dim: int
    n: int
    k: np.ndarray = field(init=False, repr=False, compare=False)
    kderiv: np.ndarray = field(init=False, repr=False, compare=False)
    ksq: np.ndarray = field(init=False, repr=False, compare=False)
    kabs: np.ndarray = field(init=False, repr=False, compare=False)
    cutoff: int = field(init=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
        k1 = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        k1[n // 2] = n // 2
        k = np.stack(np.meshgrid(*([k1] * self.dim), indexing="ij"))
        kd1 = k1.astype(float)
        kd1[n // 2] = 0.0
        kderiv = np.stack(np.meshgrid(*([kd1] * self.dim), indexing="ij"))
        ksq = np.sum(k.astype(float) ** 2, axis=0)
        cutoff = n // 3
        mask = np.all(np.abs(k) <= cutoff, axis=0)
        for name, arr in (("k", k), ("kderiv", kderiv), ("ksq", ksq),
                          ("kabs", np.sqrt(ksq)), ("dealias_mask", mask)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "cutoff", cutoff)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** self.dim

    def coords(self) -> list[np.ndarray]:
        """Physical coordinates ``x_i = 2 pi j / n`` as broadcast ij-arrays."""
        x1 = TWO_PI * np.arange(self.n) / self.n
        return np.meshgrid(*([x1] * self.dim), indexing="ij")

    def index_of(self, kvec) -> tuple[int, ...]:
        """Array index of integer wavevector ``kvec``."""
        if len(kvec) != self.dim:
            raise ValueError("wavevector length must equal dim")
        return tuple(int(ki) % self.n for ki in kvec)


def make_grid(dim: int, n_per_axis: int) -> TorusGrid:
    return TorusGrid(dim, n_per_axis)


def _as_components(grid: TorusGrid, arr: np.ndarray) -> np.ndarray:
    if arr.shape == grid.shape:
        arr = arr[np.newaxis]
    if arr.ndim != grid.dim + 1 or arr.shape[1:] != grid.shape:
        raise ValueError(f"array shape {arr.shape} does not match grid {grid.shape}")
    if arr.shape[0] not in (1, grid.dim):
        raise ValueError(f"fields have 1 or {grid.dim} components, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class RealField:
    """Physical-space samples, shape ``(components, n, ..., n)``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        arr = _as_components(self.grid, np.array(self.values, dtype=np.float64))
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("field contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, grid: TorusGrid, components: int = 1) -> "RealField":
        return cls(grid, np.zeros((components,) + grid.shape))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients, shape ``(components, n, ..., n)`` in FFT order."""

    grid: TorusGrid
    coef: np.ndarray

    def __post_init__(self):
        arr = _as_components(self.grid, np.array(self.coef, dtype=np.complex128))
        arr.setflags(write=False)
        object.__setattr__(self, "coef", arr)

    @property
    def components(self) -> int:
        return self.coef.shape[0]

    @classmethod
    def zeros(cls, grid: TorusGrid, components: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((components,) + grid.shape, dtype=complex))

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid or other.components != self.components:
            raise ValueError("fields live on different grids or have different ranks")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coef + other.coef)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coef - other.coef)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coef * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coef)


# -- array kernels (no validation, used by the integrator and diagnostics) --

def fft_array(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.dim, 0))
    return np.fft.fftn(values, axes=axes) / grid.npoints


def ifft_array(grid: TorusGrid, coef: np.ndarray) -> np.ndarray:
    axes = tuple(range(-grid.dim, 0))
    return np.fft.ifftn(coef, axes=axes).real * grid.npoints


def leray_array(grid: TorusGrid, coef: np.ndarray) -> np.ndarray:
    kd = grid.kderiv
    ksq = np.sum(kd * kd, axis=0)
    inv = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    kdotu = np.sum(kd * coef, axis=0)
    return coef - kd * (kdotu * inv)


# -- public operations --

def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, fft_array(f.grid, f.values))


def to_real(F: SpectralField) -> RealField:
    return RealField(F.grid, ifft_array(F.grid, F.coef))


def derivative(F: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along ``axis`` (0-based)."""
    if not 0 <= axis < F.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {F.grid.dim}")
    return SpectralField(F.grid, 1j * F.grid.kderiv[axis] * F.coef)


def gradient(F: SpectralField) -> SpectralField:
    if F.components != 1:
        raise ValueError("gradient takes a scalar field")
    return SpectralField(F.grid, 1j * F.grid.kderiv * F.coef[0])


def divergence(F: SpectralField) -> SpectralField:
    if F.components != F.grid.dim:
        raise ValueError("divergence takes a vector field")
    return SpectralField(F.grid, np.sum(1j * F.grid.kderiv * F.coef, axis=0))


def laplacian(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, -F.grid.ksq * F.coef)


def leray_project(U: SpectralField) -> SpectralField:
    """Project a vector field onto divergence-free fields; the mean passes through."""
    if U.components != U.grid.dim:
        raise ValueError("Leray projection takes a vector field")
    return SpectralField(U.grid, leray_array(U.grid, U.coef))


def dealias(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, F.coef * F.grid.dealias_mask)


def dealiased_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pointwise product of two fields with 2/3-rule truncation of inputs and output.

    Either factor may be a vector; a scalar times a vector broadcasts.
    """
    grid = a.grid
    pa = ifft_array(grid, a.coef * grid.dealias_mask)
    pb = ifft_array(grid, b.coef * grid.dealias_mask)
    return SpectralField(grid, fft_array(grid, pa * pb) * grid.dealias_mask)


def max_divergence(U: SpectralField) -> float:
    """``max_k |k . coef(k)|``."""
    return float(np.max(np.abs(np.sum(U.grid.kderiv * U.coef, axis=0))))


def pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Euclidean magnitude over the component axis."""
    if values.shape[0] == 1:
        return np.abs(values[0])
    return np.sqrt(np.sum(values * values, axis=0))


def lp_norm(f: RealField, p: float) -> float:
    """Grid-quadrature L^p norm on the torus; ``p = inf`` is the grid maximum.

    Vector fields use the pointwise Euclidean magnitude.
    """
    if not (p >= 1):
        raise ValueError(f"p must be in [1, inf], got {p}")
    return lp_norm_array(f.grid, f.values, p)


def lp_norm_array(grid: TorusGrid, values: np.ndarray, p: float) -> float:
    mag = pointwise_magnitude(values)
    if np.isinf(p):
        return float(mag.max())
    if p == 2:
        return float(np.sqrt(np.sum(mag * mag) * grid.cell_volume))
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def sobolev_weight(grid: TorusGrid, s: float) -> np.ndarray:
    """``|k|^{2s}`` off the mean mode, 1 on it."""
    w = np.ones(grid.shape)
    nz = grid.ksq > 0
    w[nz] = grid.ksq[nz] ** s
    return w


def sobolev_norm(F: SpectralField, s: float) -> float:
    """``(sum_k w_s(k) |coef(k)|^2 (2pi)^dim)^{1/2}`` with ``w_s`` from :func:`sobolev_weight`."""
    w = sobolev_weight(F.grid, s)
    e = np.sum(np.abs(F.coef) ** 2, axis=0)
    return float(np.sqrt(np.sum(w * e) * F.grid.volume))


def l2_norm_spectral(F: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(F.coef) ** 2) * F.grid.volume))
