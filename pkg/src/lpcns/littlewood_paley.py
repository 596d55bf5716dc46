"""Dyadic Littlewood-Paley blocks on the integer lattice.

The radial cutoff ``chi`` equals 1 on ``|xi| <= 3/4`` and 0 on ``|xi| >= 1``,
joined by the standard C-infinity step::

    chi(t) = g(4 (1 - t)),   g(a) = h(a) / (h(a) + h(1 - a)),   h(a) = exp(-1/a) (a > 0)

Shell ``q >= 0`` uses ``phi(k / 2^q)`` with ``phi(xi) = chi(xi / 2) - chi(xi)``,
shell ``-1`` uses ``chi(k)``. On the integer lattice shell -1 holds only the
mean mode. Weights use ``lambda_q = 2^q`` except ``lambda_{-1} = 1``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import (
    SpectralField,
    TorusGrid,
    ifft_array,
    lp_norm_array,
)


def _smooth_h(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = np.exp(-1.0 / a[pos])
    return out


def chi_profile(t) -> np.ndarray:
    """Radial low-pass cutoff evaluated at radii ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 0.75, 1.0, 0.0)
    mid = (t > 0.75) & (t < 1.0)
    if np.any(mid):
        a = 4.0 * (1.0 - t[mid])
        ha, hb = _smooth_h(a), _smooth_h(1.0 - a)
        out[mid] = ha / (ha + hb)
    return out if out.ndim else float(out)


def phi_profile(t) -> np.ndarray:
    """Annular profile ``chi(t/2) - chi(t)``."""
    t = np.asarray(t, dtype=float)
    return chi_profile(t / 2.0) - chi_profile(t)


def shell_lambda(q: int) -> float:
    """Weighting wavenumber; ``lambda_{-1}`` is taken as 1."""
    return 1.0 if q < 0 else 2.0**q


@dataclass(frozen=True, eq=False)
class DyadicBank:
    """Precomputed multipliers ``phi_q(k)`` for ``q = -1 .. q_max``."""

    grid: TorusGrid
    q_max: int
    multipliers: np.ndarray = field(repr=False)
    _weights: dict = field(default_factory=dict, repr=False)

    @property
    def shells(self) -> range:
        return range(-1, self.q_max + 1)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([shell_lambda(q) for q in self.shells])

    def multiplier(self, q: int) -> np.ndarray:
        if not -1 <= q <= self.q_max:
            raise ValueError(f"shell {q} outside [-1, {self.q_max}]")
        return self.multipliers[q + 1]

    def shell_weight(self, s: float) -> np.ndarray:
        """Per-wavevector weight ``sum_q lambda_q^{2s} phi_q(k)^2``.

        ``(2pi)^dim * sum_k weight * |coef|^2`` equals ``sum_q lambda_q^{2s} ||F_q||_2^2``.
        """
        key = float(s)
        w = self._weights.get(key)
        if w is None:
            lam2s = self.lambdas ** (2.0 * key)
            w = np.tensordot(lam2s, self.multipliers**2, axes=1)
            w.setflags(write=False)
            self._weights[key] = w
        return w


def build_bank(grid: TorusGrid) -> DyadicBank:
    kmax = float(grid.kabs.max())
    q_max = math.ceil(math.log2(kmax) - 1e-12)
    mults = np.empty((q_max + 2,) + grid.shape)
    mults[0] = chi_profile(grid.kabs)
    for q in range(q_max + 1):
        mults[q + 1] = phi_profile(grid.kabs / 2.0**q)
    mults.setflags(write=False)
    return DyadicBank(grid, q_max, mults)


@lru_cache(maxsize=16)
def _cached_bank(dim: int, n: int) -> DyadicBank:
    return build_bank(TorusGrid(dim, n))


def get_bank(grid: TorusGrid) -> DyadicBank:
    """Shared immutable bank for ``grid``."""
    return _cached_bank(grid.dim, grid.n)


def _bank_for(F: SpectralField, bank: DyadicBank | None) -> DyadicBank:
    if bank is None:
        return get_bank(F.grid)
    if bank.grid != F.grid:
        raise ValueError("bank was built for a different grid")
    return bank


def project_shell(F: SpectralField, q: int, bank: DyadicBank | None = None) -> SpectralField:
    """``Delta_q F``."""
    bank = _bank_for(F, bank)
    return SpectralField(F.grid, F.coef * bank.multiplier(q))


def project_low(F: SpectralField, Q: int, bank: DyadicBank | None = None) -> SpectralField:
    """``F_{<=Q} = sum_{q=-1}^{Q} Delta_q F``."""
    bank = _bank_for(F, bank)
    if Q < -1:
        raise ValueError(f"Q must be >= -1, got {Q}")
    if Q >= bank.q_max:
        return F
    low = np.sum(bank.multipliers[: Q + 2], axis=0)
    return SpectralField(F.grid, F.coef * low)


def shell_arrays(F: SpectralField, bank: DyadicBank) -> np.ndarray:
    """Physical-space shell blocks, shape ``(shells, components, n, ...)``."""
    return np.stack([ifft_array(F.grid, F.coef * m) for m in bank.multipliers])


@dataclass(frozen=True)
class ShellNorms:
    q: np.ndarray
    lam: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    lr: np.ndarray | None = None
    r: float | None = None


def shell_norms(F: SpectralField, bank: DyadicBank | None = None,
                r: float | None = None) -> ShellNorms:
    """L2 (Parseval), grid L-infinity and optional L^r norm of every shell."""
    bank = _bank_for(F, bank)
    grid = F.grid
    e = np.sum(np.abs(F.coef) ** 2, axis=0)
    l2 = np.sqrt(np.tensordot(bank.multipliers**2, e, axes=grid.dim) * grid.volume)
    blocks = shell_arrays(F, bank)
    linf = np.array([lp_norm_array(grid, b, np.inf) for b in blocks])
    lr = None
    if r is not None:
        lr = np.array([lp_norm_array(grid, b, r) for b in blocks])
    q = np.arange(-1, bank.q_max + 1)
    return ShellNorms(q, bank.lambdas, l2, linf, lr, r)


def besov_norm(F: SpectralField, s: float, p: float, bank: DyadicBank | None = None) -> float:
    """``sup_q lambda_q^s ||Delta_q F||_p`` over the lattice shells."""
    bank = _bank_for(F, bank)
    best = 0.0
    for q in bank.shells:
        coef = F.coef * bank.multiplier(q)
        if not np.any(coef):
            continue
        if p == 2:
            norm = float(np.sqrt(np.sum(np.abs(coef) ** 2) * F.grid.volume))
        else:
            norm = lp_norm_array(F.grid, ifft_array(F.grid, coef), p)
        best = max(best, shell_lambda(q) ** s * norm)
    return best


def bernstein_check(F: SpectralField, q: int, s: float, r: float,
                    bank: DyadicBank | None = None) -> float:
    """``||F_q||_r / (lambda_q^{dim (1/s - 1/r)} ||F_q||_s)``; 0 for an empty shell."""
    if not (1 <= s <= r):
        raise ValueError(f"need 1 <= s <= r, got s={s}, r={r}")
    bank = _bank_for(F, bank)
    block = ifft_array(F.grid, F.coef * bank.multiplier(q))
    denom = lp_norm_array(F.grid, block, s)
    if denom == 0.0:
        return 0.0
    expo = F.grid.dim * (1.0 / s - (0.0 if np.isinf(r) else 1.0 / r))
    return lp_norm_array(F.grid, block, r) / (shell_lambda(q) ** expo * denom)


def shell_spectrum_csv(norms: ShellNorms) -> str:
    """CSV text with columns ``q, lambda_q, l2_norm, linf_norm, lr_norm``."""
    buf = io.StringIO()
    buf.write("q,lambda_q,l2_norm,linf_norm,lr_norm\n")
    lr = norms.lr if norms.lr is not None else np.full(len(norms.q), np.nan)
    for row in zip(norms.q, norms.lam, norms.l2, norms.linf, lr):
        buf.write(f"{int(row[0])}," + ",".join(repr(float(x)) for x in row[1:]) + "\n")
    return buf.getvalue()
