"""Constrained variational objects: energy pieces, L2 gradients, penalizer, multiplier.

The energy of a profile u at constraint level mu is

    E = L_part + N_part,
    L_part = -(1/2) * sum_k m(2*pi*k/P) |coeff(k)|^2,
    N_part = -(P/N) * sum_j N(u_j),
    Q      = (1/2) * (P/N) * sum_j u_j^2,

with an optional barrier rho(||u||_{H^s_P}^2) keeping iterates away from the
Sobolev ball boundary.  The multiplier recovered by pairing the stationarity
condition with u is the wave speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .grids import PeriodicGrid, RealField, SpectralField, to_real, to_spectral
from .nonlinearity import NonlinearitySpec, N_eval, PrimitiveSpec, n_eval
from .symbols import SymbolSpec

__all__ = [
    "PenalizerSpec",
    "EnergyBreakdown",
    "ELIdentityReport",
    "energy",
    "gradient",
    "multiplier",
    "el_identity_check",
    "quadratic_charge",
]


@dataclass(frozen=True)
class PenalizerSpec:
    """Smooth increasing barrier on t = ||u||_{H^s_P}^2.

    rho == 0 on [0, R^2], rho -> infinity as t -> (2R)^2; the default shape is
    exp(-1/(t - R^2)) / ((2R)^2 - t) on the open middle interval.
    """

    R: float
    s: float = 1.0

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise DomainError(f"penalizer radius must be positive, got R={self.R}")
        if self.s < 0:
            raise DomainError(f"penalizer Sobolev index must be nonnegative, got s={self.s}")

    def rho(self, t: float) -> float:
        R2, top = self.R**2, 4 * self.R**2
        if t <= R2:
            return 0.0
        if t >= top:
            raise DomainError(f"norm^2 = {t} at or beyond the penalizer pole (2R)^2 = {top}")
        a = t - R2
        b = top - t
        return float(np.exp(-1.0 / a) / b)

    def rho_prime(self, t: float) -> float:
        R2, top = self.R**2, 4 * self.R**2
        if t <= R2:
            return 0.0
        if t >= top:
            raise DomainError(f"norm^2 = {t} at or beyond the penalizer pole (2R)^2 = {top}")
        a = t - R2
        b = top - t
        return float(np.exp(-1.0 / a) * (1.0 / (a * a * b) + 1.0 / (b * b)))

    def derivative_bound_report(self, a_exp: float = 0.5, b_exp: float = 2.0,
                                n: int = 200) -> dict:
        """Sampled constant in rho' <= C (rho^a + rho^b) on (R^2, (2R)^2); report only."""
        R2, top = self.R**2, 4 * self.R**2
        ts = R2 + (top - R2) * np.linspace(1e-3, 1 - 1e-6, n)
        rr = np.array([self.rho(t) for t in ts])
        rp = np.array([self.rho_prime(t) for t in ts])
        denom = rr**a_exp + rr**b_exp
        C = float(np.max(rp / np.maximum(denom, 1e-300)))
        return {"a": a_exp, "b": b_exp, "fitted_constant": C}


@dataclass(frozen=True)
class EnergyBreakdown:
    L_part: float
    N_part: float
    E: float
    Q: float
    penalty: float
    hsp_norm_sq: float

    @property
    def total(self) -> float:
        """Objective actually descended: E plus the barrier."""
        return self.E + self.penalty


def quadratic_charge(u: RealField) -> float:
    """Q(u) = (1/2) integral of u^2 over one period."""
    return 0.5 * u.grid.dx * float(np.sum(u.values**2))


def energy(u: RealField, sym: SymbolSpec, nl: Optional[NonlinearitySpec], mu: float,
           pen: Optional[PenalizerSpec] = None, s: Optional[float] = None,
           primitive: Optional[PrimitiveSpec] = None) -> EnergyBreakdown:
    """Energy pieces of u; nl=None means the purely dispersive case n == 0."""
    g = u.grid
    c = to_spectral(u).coeffs
    mvals = sym(g.xi)
    L_part = -0.5 * float(np.sum(mvals * np.abs(c) ** 2))
    if nl is None:
        N_part = 0.0
    else:
        N_part = -g.dx * float(np.sum(N_eval(nl, u.values, mu, primitive=primitive)))
    s_eff = pen.s if pen is not None else (1.0 if s is None else s)
    hsp_sq = float(np.sum(g.bracket(2.0 * s_eff) * np.abs(c) ** 2))
    penalty = pen.rho(hsp_sq) if pen is not None else 0.0
    return EnergyBreakdown(L_part=L_part, N_part=N_part, E=L_part + N_part,
                           Q=quadratic_charge(u), penalty=penalty, hsp_norm_sq=hsp_sq)


def gradient(u: RealField, sym: SymbolSpec, nl: Optional[NonlinearitySpec], mu: float,
             pen: Optional[PenalizerSpec] = None) -> RealField:
    """L2 representative of the penalized energy differential: -Lu - n(u) + barrier term."""
    g = u.grid
    c = to_spectral(u).coeffs
    Lu = to_real(SpectralField(g, sym(g.xi) * c)).values
    out = -Lu
    if nl is not None:
        out = out - n_eval(nl, u.values, mu)
    if pen is not None:
        w = g.bracket(2.0 * pen.s)
        hsp_sq = float(np.sum(w * np.abs(c) ** 2))
        rp = pen.rho_prime(hsp_sq)  # raises at the pole
        if rp != 0.0:
            out = out + 2.0 * rp * to_real(SpectralField(g, w * c)).values
    return RealField(g, out)


def multiplier(u: RealField, sym: SymbolSpec, nl: Optional[NonlinearitySpec], mu: float,
               pen: Optional[PenalizerSpec] = None) -> float:
    """Wave speed from pairing the stationarity condition with u itself.

    nu = [<Lu + n(u), u> - 2 rho'(||u||^2) ||u||_{H^s_P}^2] / (2 mu),
    requiring Q(u) = mu to 1e-10 relative.
    """
    if not mu > 0:
        raise DomainError(f"multiplier recovery needs mu > 0, got {mu}")
    Qu = quadratic_charge(u)
    if abs(Qu - mu) > 1e-10 * mu:
        raise DomainError(f"constraint violated: Q(u) = {Qu} vs mu = {mu}")
    g = u.grid
    c = to_spectral(u).coeffs
    Lu = to_real(SpectralField(g, sym(g.xi) * c)).values
    nu_vals = n_eval(nl, u.values, mu) if nl is not None else 0.0
    pairing = g.dx * float(np.sum((Lu + nu_vals) * u.values))
    if pen is not None:
        w = g.bracket(2.0 * pen.s)
        hsp_sq = float(np.sum(w * np.abs(c) ** 2))
        pairing -= 2.0 * pen.rho_prime(hsp_sq) * hsp_sq
    return pairing / (2.0 * mu)


@dataclass(frozen=True)
class ELIdentityReport:
    lhs: float
    rhs: float
    rel_gap: float
    homogeneous_defect: float


def el_identity_check(u: RealField, sym: SymbolSpec, nl: NonlinearitySpec, mu: float,
                      primitive: Optional[PrimitiveSpec] = None) -> ELIdentityReport:
    """Algebraic identity used in the wave-speed bound:

    <Lu + n(u), u> = -(2+q) E + q L_part - integral[(2+q) N(u) - u n(u)].

    The last integrand vanishes pointwise for the homogeneous leading term, so
    the gap must be at rounding level for any profile.
    """
    g = u.grid
    c = to_spectral(u).coeffs
    Lu = to_real(SpectralField(g, sym(g.xi) * c)).values
    nvals = n_eval(nl, u.values, mu)
    Nvals = N_eval(nl, u.values, mu, primitive=primitive)
    lhs = g.dx * float(np.sum((Lu + nvals) * u.values))
    eb = energy(u, sym, nl, mu, primitive=primitive)
    q = nl.q
    last = g.dx * float(np.sum((2 + q) * Nvals - u.values * nvals))
    rhs = -(2 + q) * eb.E + q * eb.L_part - last
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return ELIdentityReport(lhs=lhs, rhs=rhs, rel_gap=abs(lhs - rhs) / scale,
                            homogeneous_defect=last)
