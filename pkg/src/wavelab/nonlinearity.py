"""The nonlinearity n = n_q + n_r, its amplitude cutoff, primitive, and growth diagnostics.

The leading term is gamma*|x|^(1+q) (absolute form) or gamma*x*|x|^q (signed
form, gamma > 0).  With the cutoff enabled, evaluation is frozen outside
[-A_mu, A_mu] with A_mu = c_A * mu^theta, which makes the composition globally
Lipschitz while leaving small-amplitude solutions untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError, DomainError, ValidationError

__all__ = [
    "CutoffSpec",
    "NonlinearitySpec",
    "PrimitiveSpec",
    "GrowthReport",
    "n_eval",
    "n_prime",
    "N_eval",
    "growth_check",
]

log = logging.getLogger(__name__)

_JACOBIAN_CLAMP = 1.0 / np.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class CutoffSpec:
    enabled: bool = False
    theta: float = 0.25
    c_A: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.theta < 0.5):
            raise ConfigurationError(f"cutoff exponent theta must lie in (0, 1/2), got {self.theta}")
        if not self.c_A > 0:
            raise ConfigurationError(f"cutoff scale c_A must be positive, got {self.c_A}")

    def amplitude(self, mu: float) -> float:
        """A_mu = c_A * mu^theta."""
        if not mu > 0:
            raise DomainError(f"cutoff amplitude needs mu > 0, got {mu}")
        return self.c_A * mu**self.theta


@dataclass(frozen=True)
class NonlinearitySpec:
    """Superlinear nonlinearity with optional smooth remainder and cutoff."""

    q: float
    gamma: float
    form: str = "absolute"
    remainder: Optional[Callable[[np.ndarray], np.ndarray]] = None
    remainder_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)

    def __post_init__(self) -> None:
        if not self.q > 0:
            raise ConfigurationError(f"growth exponent must be positive, got q={self.q}")
        if self.gamma == 0:
            raise ConfigurationError("leading coefficient gamma must be nonzero")
        if self.form not in ("absolute", "signed"):
            raise ConfigurationError(f"form must be 'absolute' or 'signed', got {self.form!r}")
        if self.form == "signed" and not self.gamma > 0:
            raise ConfigurationError("signed form requires gamma > 0")
        if self.remainder is not None:
            self._check_remainder_smallness()

    def _check_remainder_smallness(self) -> None:
        # |n_r(x)| = o(|x|^(1+q)) as x -> 0, sampled on a decreasing sequence
        xs = np.geomspace(1e-1, 1e-7, 13)
        ratios = np.abs(np.asarray(self.remainder(xs), dtype=float)) / xs ** (1 + self.q)
        if not (ratios[-1] < 0.1 * max(ratios[0], 1e-300) or ratios[-1] < 1e-10):
            raise ValidationError(
                "remainder does not look like o(|x|^(1+q)) near 0: "
                f"ratio sequence {ratios[[0, len(ratios) // 2, -1]]}"
            )

    def n_q(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        if self.form == "absolute":
            return self.gamma * ax ** (1 + self.q)
        return self.gamma * x * ax**self.q

    def n_q_prime(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        if self.form == "absolute":
            out = self.gamma * (1 + self.q) * ax**self.q * np.sign(x)
        else:
            out = self.gamma * (1 + self.q) * ax**self.q
        if self.q < 1:
            big = np.abs(out) > _JACOBIAN_CLAMP
            if np.any(big):
                log.warning("n'(u) clamped at %0.3g near u = 0 (q = %g < 1)", _JACOBIAN_CLAMP, self.q)
                out = np.clip(out, -_JACOBIAN_CLAMP, _JACOBIAN_CLAMP)
        return out

    def n_raw(self, x: np.ndarray) -> np.ndarray:
        """n = n_q + n_r without the cutoff."""
        out = self.n_q(x)
        if self.remainder is not None:
            out = out + self.remainder(x)
        return out

    def N_q(self, x: np.ndarray) -> np.ndarray:
        """Closed-form primitive of the leading term: x*n_q(x)/(2+q)."""
        return x * self.n_q(x) / (2 + self.q)


def n_eval(spec: NonlinearitySpec, x, mu: Optional[float] = None) -> np.ndarray:
    """Pointwise nonlinearity, with plateau outside [-A_mu, A_mu] when the cutoff is on."""
    x = np.asarray(x, dtype=np.float64)
    if not spec.cutoff.enabled:
        return spec.n_raw(x)
    A = spec.cutoff.amplitude(_require_mu(mu))
    return spec.n_raw(np.clip(x, -A, A))


def n_prime(spec: NonlinearitySpec, x, mu: Optional[float] = None) -> np.ndarray:
    """Derivative of the (cutoff) nonlinearity; zero on the plateau."""
    x = np.asarray(x, dtype=np.float64)
    out = spec.n_q_prime(x)
    if spec.remainder_prime is not None:
        out = out + spec.remainder_prime(x)
    elif spec.remainder is not None:
        h = 1e-7
        out = out + (np.asarray(spec.remainder(x + h)) - np.asarray(spec.remainder(x - h))) / (2 * h)
    if spec.cutoff.enabled:
        A = spec.cutoff.amplitude(_require_mu(mu))
        out = np.where(np.abs(x) > A, 0.0, out)
    return out


def _require_mu(mu: Optional[float]) -> float:
    if mu is None or not mu > 0:
        raise DomainError(f"cutoff-enabled evaluation needs mu > 0, got {mu}")
    return float(mu)


class PrimitiveSpec:
    """Primitive N = N_q + N_r of the nonlinearity, vanishing at 0.

    N_q is closed-form; N_r is computed by adaptive quadrature from 0 with
    results cached per evaluation point.
    """

    def __init__(self, spec: NonlinearitySpec, quad_tol: float = 1e-12):
        self.spec = spec
        self.quad_tol = quad_tol
        self._cache: dict[float, float] = {}

    def N_q(self, x) -> np.ndarray:
        return self.spec.N_q(np.asarray(x, dtype=np.float64))

    def N_r(self, x) -> np.ndarray:
        if self.spec.remainder is None:
            return np.zeros_like(np.asarray(x, dtype=np.float64))
        xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
        out = np.empty_like(xs)
        f = lambda t: float(self.spec.remainder(np.asarray(t, dtype=float)))
        for i, xv in enumerate(xs):
            key = float(xv)
            if key not in self._cache:
                val, _ = quad(f, 0.0, key, epsabs=self.quad_tol, epsrel=self.quad_tol, limit=200)
                self._cache[key] = val
            out[i] = self._cache[key]
        return out.reshape(np.shape(x))

    def N(self, x) -> np.ndarray:
        return self.N_q(x) + self.N_r(x)


def N_eval(spec: NonlinearitySpec, x, mu: Optional[float] = None,
           primitive: Optional[PrimitiveSpec] = None) -> np.ndarray:
    """Primitive of the (cutoff) nonlinearity.

    Inside |x| <= A_mu the closed form (plus quadrature remainder); outside,
    linear continuation with slope n(+-A_mu), matching the plateau of n.
    """
    x = np.asarray(x, dtype=np.float64)
    prim = primitive if primitive is not None else PrimitiveSpec(spec)
    if not spec.cutoff.enabled:
        return prim.N(x)
    A = spec.cutoff.amplitude(_require_mu(mu))
    xc = np.clip(x, -A, A)
    inner = prim.N(xc)
    slope = spec.n_raw(xc)  # = n(+-A) in the clipped region
    return inner + slope * (x - xc)


@dataclass(frozen=True)
class GrowthReport:
    """sup over the sample of |n~(x)| / (mu^(theta*q) |x|) against its predicted bound."""

    mu: float
    sup_ratio: float
    bound: float
    passed: bool


def growth_check(spec: NonlinearitySpec, mu: float, sample: np.ndarray) -> GrowthReport:
    if not spec.cutoff.enabled:
        raise ConfigurationError("growth_check requires the cutoff to be enabled")
    x = np.asarray(sample, dtype=np.float64)
    x = x[x != 0.0]
    vals = np.abs(n_eval(spec, x, mu)) / (mu ** (spec.cutoff.theta * spec.q) * np.abs(x))
    sup = float(np.max(vals)) if len(x) else 0.0
    # |n~(x)|/|x| <= |gamma| A_mu^q for the leading term, i.e. |gamma| c_A^q mu^(theta q)
    bound = abs(spec.gamma) * spec.cutoff.c_A**spec.q
    if spec.remainder is not None:
        bound *= 1.5  # headroom for the o(|x|^(1+q)) remainder at finite amplitude
    return GrowthReport(mu=mu, sup_ratio=sup, bound=bound, passed=bool(sup <= bound * (1 + 1e-9)))
