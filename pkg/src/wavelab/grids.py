"""Periodic grids, discrete Fourier transforms, Sobolev norms and smooth frequency splitting.

Transform convention (per-period unitary): the coefficient of integer frequency k is

    coeff(k) = (1/sqrt(P)) * integral over one period of u(x) exp(-2*pi*i*k*x/P) dx,

approximated by the collocation sum.  With this normalization the discrete
Parseval identity  (P/N) * sum(u_j^2) = sum(|coeff(k)|^2)  holds exactly, and a
constant c has coeff(0) = c*sqrt(P).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ValidationError

__all__ = [
    "PeriodicGrid",
    "RealField",
    "SpectralField",
    "FrequencySplitSpec",
    "to_spectral",
    "to_real",
    "l2_norm",
    "l2_inner",
    "hsp_norm",
    "hsp_inner",
    "frequency_split",
]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PeriodicGrid:
    """Collocation grid for one period (-P/2, P/2) with N points.

    Points are x_j = -P/2 + j*P/N and the integer frequency lattice is
    k in [-N/2, N/2), stored in FFT order.
    """

    P: float
    N: int = 1024

    def __post_init__(self) -> None:
        if not self.P > 0:
            raise ConfigurationError(f"period must be positive, got P={self.P}")
        if self.N % 2 != 0 or self.N < 8:
            raise ConfigurationError(f"collocation count must be even and >= 8, got N={self.N}")
        if not _is_power_of_two(self.N):
            raise ConfigurationError(f"collocation count must be a power of two, got N={self.N}")

    @cached_property
    def dx(self) -> float:
        return self.P / self.N

    @cached_property
    def x(self) -> np.ndarray:
        """Collocation points, read-only."""
        x = -self.P / 2 + self.dx * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Integer frequencies in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        k = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        """Physical frequencies 2*pi*k/P on the lattice, FFT order."""
        xi = 2 * np.pi * self.k / self.P
        xi.flags.writeable = False
        return xi

    @property
    def nyquist(self) -> float:
        """Largest physical frequency magnitude on the lattice, pi*N/P."""
        return np.pi * self.N / self.P

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^k factor translating numpy's 0-anchored FFT to the -P/2-anchored grid
        ph = np.where(self.k % 2 == 0, 1.0, -1.0)
        ph.flags.writeable = False
        return ph

    @cached_property
    def _reflect_idx(self) -> np.ndarray:
        # index map j -> sample at -x_j (exact on this grid)
        idx = (self.N - np.arange(self.N)) % self.N
        idx.flags.writeable = False
        return idx

    def bracket(self, s: float) -> np.ndarray:
        """Japanese-bracket weights <2*pi*k/P>^s on the lattice."""
        return (1.0 + self.xi**2) ** (s / 2.0)


def _require_same_grid(a, b) -> None:
    if a.grid is not b.grid and (a.grid.P != b.grid.P or a.grid.N != b.grid.N):
        raise ConfigurationError("fields live on different grids")


@dataclass(frozen=True)
class RealField:
    """A wave profile as N real samples on a PeriodicGrid."""

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.N,):
            raise ConfigurationError(
                f"field length {v.shape} does not match grid N={self.grid.N}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("field contains non-finite samples")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def shifted(self, steps: int) -> "RealField":
        """Grid translation u(. + steps*dx), exact sample relabeling."""
        return RealField(self.grid, np.roll(self.values, -steps))

    def reflected(self) -> "RealField":
        """u(-x); exact on the grid since the point set is symmetric."""
        return RealField(self.grid, self.values[self.grid._reflect_idx])


@dataclass(frozen=True)
class SpectralField:
    """Hermitian-symmetric Fourier coefficients of a real field, FFT order."""

    grid: PeriodicGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.N,):
            raise ConfigurationError(
                f"coefficient length {c.shape} does not match grid N={self.grid.N}"
            )
        scale = max(float(np.max(np.abs(c))), 1.0)
        mirrored = np.conj(c[self.grid._reflect_idx])
        if np.max(np.abs(c - mirrored)) > 1e-10 * scale:
            raise ValidationError("coefficients are not Hermitian-symmetric")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k: int) -> complex:
        """Coefficient at integer frequency k."""
        n = self.grid.N
        if not -n // 2 <= k < n // 2:
            raise ConfigurationError(f"frequency {k} outside lattice [-N/2, N/2)")
        return complex(self.coeffs[k % n])


def to_spectral(u: RealField) -> SpectralField:
    """Forward transform under the per-period unitary convention."""
    g = u.grid
    c = (np.sqrt(g.P) / g.N) * g._phase * np.fft.fft(u.values)
    return SpectralField(g, c)


def to_real(uh: SpectralField) -> RealField:
    """Inverse transform; round-trips with to_spectral to machine precision."""
    g = uh.grid
    v = np.fft.ifft(uh.coeffs / g._phase) * (g.N / np.sqrt(g.P))
    return RealField(g, v.real)


def l2_norm(u: RealField) -> float:
    """Collocation L2 norm over one period."""
    g = u.grid
    return float(np.sqrt(g.dx * np.sum(u.values**2)))


def l2_inner(u: RealField, v: RealField) -> float:
    _require_same_grid(u, v)
    return float(u.grid.dx * np.sum(u.values * v.values))


def hsp_norm(u: RealField, s: float) -> float:
    """Periodic Sobolev norm: sum over k of <2*pi*k/P>^(2s) |coeff(k)|^2, square-rooted."""
    if s < 0:
        raise ConfigurationError(f"Sobolev index must be nonnegative, got s={s}")
    c = to_spectral(u).coeffs
    w = u.grid.bracket(2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2)))


def hsp_inner(u: RealField, v: RealField, s: float) -> float:
    if s < 0:
        raise ConfigurationError(f"Sobolev index must be nonnegative, got s={s}")
    _require_same_grid(u, v)
    cu = to_spectral(u).coeffs
    cv = to_spectral(v).coeffs
    w = u.grid.bracket(2.0 * s)
    return float(np.real(np.sum(w * cu * np.conj(cv))))


def _smoothstep(t: np.ndarray) -> np.ndarray:
    # clamped quintic smoothstep, C^2 at both ends
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class FrequencySplitSpec:
    """Smooth low/high decomposition: profile phi == 1 for |xi| <= xi0 - delta, 0 for |xi| >= xi0."""

    xi0: float
    delta: float

    def __post_init__(self) -> None:
        if not (0 < self.delta < self.xi0):
            raise ConfigurationError(
                f"need 0 < delta < xi0, got delta={self.delta}, xi0={self.xi0}"
            )

    def phi(self, xi: np.ndarray) -> np.ndarray:
        t = (np.abs(xi) - (self.xi0 - self.delta)) / self.delta
        return 1.0 - _smoothstep(t)


def frequency_split(u: RealField, spec: FrequencySplitSpec) -> tuple[RealField, RealField]:
    """Split u = u_lo + u_hi with coeff_lo = phi * coeff; reconstruction is exact.

    The high part is formed as coeff - coeff_lo so the two coefficient arrays
    sum back to the original within one ulp per entry.
    """
    g = u.grid
    if spec.xi0 >= g.nyquist:
        raise ConfigurationError(
            f"cutoff xi0={spec.xi0} must lie below the grid Nyquist frequency {g.nyquist}"
        )
    c = to_spectral(u).coeffs
    lo = spec.phi(g.xi) * c
    hi = c - lo
    u_lo = to_real(SpectralField(g, lo))
    u_hi = to_real(SpectralField(g, hi))
    return u_lo, u_hi
