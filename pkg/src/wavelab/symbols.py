"""Dispersion symbols m(xi): construction, multiplier action, kernels, periodization.

A symbol acts on a periodic field coefficient-wise as m(2*pi*k/P); its inverse
Fourier transform K is the convolution kernel.  Folding K over shifts of one
period produces K_P whose Fourier coefficients satisfy

    coeff_{K_P}(k) = sqrt(2*pi/P) * m(2*pi*k/P),

which periodization_check verifies numerically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ValidationError
from .grids import PeriodicGrid, RealField, SpectralField, to_real, to_spectral

__all__ = [
    "SymbolSpec",
    "KernelSample",
    "PeriodizationReport",
    "WienerReport",
    "builtin_symbol",
    "load_symbol_table",
    "apply_multiplier",
    "kernel_sample",
    "periodization_check",
    "wiener_predicates",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SymbolSpec:
    """Even real dispersion symbol with its order and low-frequency expansion data.

    m0 = m(0) is the strictly positive global maximum; d = m^(2*ell)(0) < 0 is the
    first nonvanishing even derivative at the origin, so that near zero

        m(xi) = m0 + d/(2*ell)! * xi^(2*ell) + O(xi^(2*ell+2)).
    """

    name: str
    m: Callable[[np.ndarray], np.ndarray]
    sigma: float
    ell: int
    m0: float
    d: float
    valid_up_to: float = np.inf

    def __call__(self, xi) -> np.ndarray:
        return np.asarray(self.m(np.asarray(xi, dtype=np.float64)))

    def validate(self, xi_max: float = 64.0, n: int = 2001) -> dict:
        """Sampled invariant checks; raises ValidationError on structural failures.

        Returns fitted diagnostics: the decay constant C with |m| <= C <xi>^sigma
        on the sampled range, and the Richardson-fitted order of the Maclaurin
        remainder (expected about 2*ell + 2).
        """
        hi = min(xi_max, self.valid_up_to)
        xi = np.linspace(0.0, hi, n)[1:]
        mp = self(xi)
        mm = self(-xi)
        scale = max(float(np.max(np.abs(mp))), 1e-300)
        if np.max(np.abs(mp - mm)) > 1e-12 * scale:
            raise ValidationError(f"symbol {self.name} is not even on the sampled lattice")
        m_origin = float(self(0.0))
        if not m_origin > 0 or abs(m_origin - self.m0) > 1e-10 * max(1.0, self.m0):
            raise ValidationError(f"symbol {self.name}: m(0)={m_origin} does not match m0={self.m0}")
        if np.max(mp) >= self.m0 * (1 + 1e-12):
            raise ValidationError(f"symbol {self.name}: maximum at 0 is not global on samples")
        decay_c = float(np.max(np.abs(mp) / (1.0 + xi**2) ** (self.sigma / 2.0)))

        # Richardson fit of the remainder order near 0
        fact = math.factorial(2 * self.ell)
        xs = 0.1 * 2.0 ** -np.arange(4)
        rem = np.abs(self(xs) - self.m0 - (self.d / fact) * xs ** (2 * self.ell))
        rem = np.maximum(rem, 1e-300)
        orders = np.log2(rem[:-1] / rem[1:])
        fitted_order = float(np.median(orders))
        if fitted_order < 2 * self.ell + 1.0:
            raise ValidationError(
                f"symbol {self.name}: remainder order {fitted_order:.2f} below 2*ell+1; "
                "expansion data (m0, d, ell) look inconsistent"
            )
        return {"decay_constant": decay_c, "remainder_order": fitted_order}


def _whitham_m(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.float64)
    out = np.empty_like(xi)
    small = np.abs(xi) < 1e-4
    x2 = xi[small] ** 2
    # series for tanh(x)/x = 1 - x^2/3 + 2x^4/15; sqrt expanded to O(x^4)
    out[small] = 1.0 - x2 / 6.0 + (19.0 / 360.0) * x2**2
    xs = xi[~small]
    out[~small] = np.sqrt(np.tanh(xs) / xs)
    return out


def load_symbol_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column whitespace-separated (xi, m) file; xi >= 0 increasing, or even pairs."""
    data = np.loadtxt(path, ndmin=2)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValidationError(f"symbol table {path}: expected two columns")
    xi, m = data[:, 0], data[:, 1]
    if np.any(xi < 0):
        # a table carrying negative frequencies must be an even function of xi
        order = np.argsort(xi)
        xi, m = xi[order], m[order]
        pos = xi > 0
        neg = xi < 0
        xp, mp = xi[pos], m[pos]
        xn, mn = -xi[neg][::-1], m[neg][::-1]
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if len(xp) != len(xn) or np.any(np.abs(xp - xn) > 1e-12 * max(1.0, xp.max(initial=0))) \
                or np.any(np.abs(mp - mn) > 1e-12 * scale):
            raise ValidationError(f"symbol table {path}: negative-frequency rows are not even")
        keep = xi >= 0
        xi, m = xi[keep], m[keep]
    if np.any(np.diff(xi) <= 0):
        raise ValidationError(f"symbol table {path}: frequencies must be strictly increasing")
    if xi[0] != 0.0:
        raise ValidationError(f"symbol table {path}: first row must sample xi = 0")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"symbol table {path}: non-finite symbol values")
    return xi, m


def _table_symbol(xi_s: np.ndarray, m_s: np.ndarray, name: str) -> SymbolSpec:
    xi_s = np.asarray(xi_s, dtype=np.float64)
    m_s = np.asarray(m_s, dtype=np.float64)

    def ev(xi):
        return np.interp(np.abs(xi), xi_s, m_s)

    m0 = float(m_s[0])
    # quadratic fit through the first interior points for d = m''(0)
    if len(xi_s) >= 3 and m0 != 0.0:
        span = xi_s[1:4]
        vals = m_s[1:4]
        d = float(np.mean(2.0 * (vals - m0) / span**2))
    else:
        d = 0.0
    # tail decay exponent from the last decade of samples
    tail = xi_s >= max(xi_s[-1] / 10.0, xi_s[1])
    with np.errstate(divide="ignore"):
        lx = np.log(1.0 + xi_s[tail] ** 2) / 2.0
        lm = np.log(np.maximum(np.abs(m_s[tail]), 1e-300))
    sigma = float(np.polyfit(lx, lm, 1)[0]) if np.count_nonzero(tail) >= 2 else 0.0
    return SymbolSpec(name=name, m=ev, sigma=sigma, ell=1, m0=m0, d=d,
                      valid_up_to=float(xi_s[-1]))


def builtin_symbol(name: str, **params) -> SymbolSpec:
    """Construct a named symbol.

    whitham:    m(xi) = sqrt(tanh(xi)/xi), order -1/2, m''(0) = -1/3.
    fractional: m(xi) = <xi>^sigma for sigma < 0 (params: sigma).
    table:      interpolated from a two-column file (params: path) or arrays
                (params: xi, m).
    """
    if name == "whitham":
        if params:
            raise ConfigurationError(f"whitham takes no parameters, got {sorted(params)}")
        return SymbolSpec(name="whitham", m=_whitham_m, sigma=-0.5, ell=1,
                          m0=1.0, d=-1.0 / 3.0)
    if name == "fractional":
        sigma = params.pop("sigma", None)
        if params:
            raise ConfigurationError(f"unknown fractional parameters {sorted(params)}")
        if sigma is None or not sigma < 0:
            raise ConfigurationError(f"fractional symbol needs sigma < 0, got {sigma}")
        sigma = float(sigma)

        def ev(xi, _s=sigma):
            return (1.0 + np.asarray(xi, dtype=np.float64) ** 2) ** (_s / 2.0)

        return SymbolSpec(name=f"fractional({sigma})", m=ev, sigma=sigma, ell=1,
                          m0=1.0, d=sigma)
    if name == "table":
        if "path" in params:
            xi_s, m_s = load_symbol_table(params.pop("path"))
        elif "xi" in params and "m" in params:
            xi_s = np.asarray(params.pop("xi"), dtype=np.float64)
            m_s = np.asarray(params.pop("m"), dtype=np.float64)
        else:
            raise ConfigurationError("table symbol needs path= or xi=/m= arrays")
        if params:
            raise ConfigurationError(f"unknown table parameters {sorted(params)}")
        return _table_symbol(xi_s, m_s, name="table")
    raise ConfigurationError(f"unknown symbol '{name}' (expected whitham, fractional, table)")


def apply_multiplier(u: RealField, sym: SymbolSpec) -> RealField:
    """Coefficient-wise action (Lu)^(k) = m(2*pi*k/P) * coeff(k)."""
    g = u.grid
    if g.nyquist > sym.valid_up_to * (1 + 1e-12):
        raise ConfigurationError(
            f"grid Nyquist {g.nyquist:.3g} exceeds symbol validated range {sym.valid_up_to:.3g}"
        )
    c = to_spectral(u).coeffs
    return to_real(SpectralField(g, sym(g.xi) * c))


@dataclass(frozen=True)
class KernelSample:
    """Kernel K = F^{-1}(m) sampled on [-X, X) by the discrete inverse transform.

    The symbol is sampled on [-Xi, Xi) with Xi = pi*M/(2X); the result is the
    band-limited kernel, 2X-periodized.  tail_estimate measures |K| mass on
    |x| in [X/2, X], a proxy for the folding truncation error.
    """

    symbol: str
    X: float
    M: int
    x: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    dx: float
    xi_max: float
    l1_estimate: float
    tail_estimate: float
    underresolved: bool


def kernel_sample(sym: SymbolSpec, X: float, M: int) -> KernelSample:
    if not X > 0:
        raise ConfigurationError(f"half-width must be positive, got X={X}")
    if M < 8 or (M & (M - 1)) != 0:
        raise ConfigurationError(f"sample count must be a power of two >= 8, got M={M}")
    Xi = np.pi * M / (2.0 * X)
    dxi = np.pi / X  # = 2*Xi/M
    dx = 2.0 * X / M
    i = np.arange(M)
    xi = -Xi + dxi * i
    mvals = sym(xi)
    # K(x_n) = (dxi/sqrt(2pi)) * (-1)^n * M * ifft((-1)^i m(xi_i)); M divisible by 4
    signs = np.where(i % 2 == 0, 1.0, -1.0)
    K = (dxi / np.sqrt(2 * np.pi)) * signs * (M * np.fft.ifft(signs * mvals)).real
    x = -X + dx * i
    absK = np.abs(K)
    l1 = float(dx * np.sum(absK))
    tail_mask = np.abs(x) >= X / 2.0
    tail = float(dx * np.sum(absK[tail_mask]))
    peak = float(np.max(np.abs(mvals))) if M else 0.0
    under = bool(peak > 0 and max(abs(mvals[0]), abs(sym(Xi))) > 1e-2 * peak)
    if under:
        log.warning("kernel_sample(%s): symbol not decayed at Xi=%.3g; result may ring",
                    sym.name, Xi)
    return KernelSample(symbol=sym.name, X=X, M=M, x=x, K=K, dx=dx, xi_max=Xi,
                        l1_estimate=l1, tail_estimate=tail, underresolved=under)


@dataclass(frozen=True)
class PeriodizationReport:
    symbol: str
    P: float
    k_max: int
    max_rel_deviation: float
    aligned: bool
    coeffs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)


def fold_kernel(ks: KernelSample, P: float) -> tuple[np.ndarray, np.ndarray]:
    """Fold samples into K_P = sum_j K(. + j*P) on one period anchored at 0.

    Requires the sample grid commensurate with P (2X/P integer dividing M);
    then the fold is an exact reindexing of the samples.
    """
    ratio = 2.0 * ks.X / P
    c = int(round(ratio))
    if abs(ratio - c) > 1e-9 or c < 1 or ks.M % c != 0:
        raise ConfigurationError(
            f"sample domain 2X={2 * ks.X} must be an integer multiple of P={P} dividing M={ks.M}"
        )
    p = ks.M // c
    K_P = ks.K.reshape(c, p).sum(axis=0)
    y = ks.dx * np.arange(p)  # positions mod P, anchored at 0 since X is a multiple of P/2
    return y, K_P


def periodization_check(sym: SymbolSpec, grid: PeriodicGrid, ks: KernelSample) -> PeriodizationReport:
    """Compare Fourier coefficients of the folded kernel with sqrt(2*pi/P)*m(2*pi*k/P)."""
    P = grid.P
    if ks.X < 3 * P:
        raise ConfigurationError(f"kernel domain X={ks.X} must cover at least 3 periods of P={P}")
    try:
        y, K_P = fold_kernel(ks, P)
        aligned = True
    except ConfigurationError:
        # interpolated fallback for incommensurate sample grids
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(ks.x, ks.K)
        y = np.linspace(0.0, P, 4096, endpoint=False)
        J = int(np.floor((ks.X - P) / P))
        shifts = np.arange(-J - 1, J + 1) * P
        K_P = np.zeros_like(y)
        yc = np.where(y > P / 2, y - P, y)
        for sh in shifts:
            pts = yc + sh
            inside = np.abs(pts) <= ks.X - ks.dx
            K_P[inside] += spline(pts[inside])
        aligned = False
    p = len(y)
    k_max = min(grid.N // 4, p // 4)
    ks_range = np.arange(k_max + 1)
    # coeff(k) = (sqrt(P)/p) * sum_i K_P(y_i) exp(-2*pi*i*k*y_i/P) with y_i = i*dx
    dft = np.fft.fft(K_P)[: k_max + 1]
    coeffs = (np.sqrt(P) / p) * dft.real
    targets = np.sqrt(2 * np.pi / P) * sym(2 * np.pi * ks_range / P)
    denom = np.maximum(np.abs(targets), 1e-300)
    devs = np.abs(coeffs - targets) / denom
    return PeriodizationReport(symbol=sym.name, P=P, k_max=k_max,
                               max_rel_deviation=float(np.max(devs)),
                               aligned=aligned, coeffs=coeffs, targets=targets)


@dataclass(frozen=True)
class WienerReport:
    """Numeric sufficient checks for membership in the Wiener class.

    Three conditions, each pass / fail / inconclusive:
      1. derivative decay: fitted sigma < 0 and sigma + sigma' < -1;
      2. integrability pair: some p1 in [1, inf), p2 in (1, inf) with
         1/p1 + 1/p2 > 1, m in L^p1 and m' in L^p2 per the fitted exponents;
      3. quasi-convexity: decay plus convergent integral of xi |d m'(xi)|.
    """

    symbol: str
    sigma_fit: float
    sigma_prime_fit: float
    quasiconvex_integral: float
    quasiconvex_increments: tuple
    condition_decay: str
    condition_integrability: str
    condition_quasiconvex: str
    overall: str


def _tail_slope(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int = 400) -> float:
    xi = np.geomspace(lo, hi, n)
    vals = np.abs(f(xi))
    good = vals > 1e-300
    if np.count_nonzero(good) < n // 2:
        return -np.inf  # decays faster than any power on this range
    lx = 0.5 * np.log(1.0 + xi[good] ** 2)
    lv = np.log(vals[good])
    return float(np.polyfit(lx, lv, 1)[0])


def wiener_predicates(sym: SymbolSpec, xi_max: float = 256.0, tol: float = 0.05) -> WienerReport:
    """Finite-range sufficient checks; 'inconclusive' is a valid verdict."""
    hi = min(xi_max, sym.valid_up_to)
    lo = hi / 8.0

    def mprime(xi):
        h = np.maximum(1e-6, 1e-8 * np.abs(xi))
        return (sym(xi + h) - sym(xi - h)) / (2 * h)

    sig = _tail_slope(sym, lo, hi)
    sigp = _tail_slope(mprime, lo, hi)

    decays = sig < -0.01

    # condition 1: sigma + sigma' < -1
    if not decays:
        c1 = "fail"
    else:
        ssum = sig + sigp
        c1 = "pass" if ssum < -1 - tol else ("fail" if ssum > -1 + tol else "inconclusive")

    # condition 2: achievable 1/p1 + 1/p2 from the fitted exponents
    if not decays:
        c2 = "fail"
    else:
        cap = min(-sig, 1.0) + min(-sigp, 1.0)
        c2 = "pass" if cap > 1 + tol else ("fail" if cap < 1 - tol else "inconclusive")

    # condition 3: V(Xi) = int_0^Xi xi |d m'(xi)| converges as Xi grows
    grid = np.linspace(1e-3, hi, 8001)
    mp = mprime(grid)
    dmp = np.abs(np.diff(mp))
    xi_mid = 0.5 * (grid[:-1] + grid[1:])
    cum = np.cumsum(xi_mid * dmp)
    idx = [len(cum) // 4 - 1, len(cum) // 2 - 1, len(cum) - 1]
    V = [float(cum[i]) for i in idx]
    inc1, inc2 = V[1] - V[0], V[2] - V[1]
    if not decays:
        c3 = "fail"
    elif inc2 <= inc1 + 1e-12 and inc2 < tol * max(V[2], 1e-300):
        c3 = "pass"
    elif inc2 > 2 * inc1 and inc2 > tol * max(V[2], 1e-300):
        c3 = "fail"
    else:
        c3 = "inconclusive"

    overall = "pass" if "pass" in (c1, c2, c3) else (
        "fail" if {c1, c2, c3} == {"fail"} else "inconclusive")
    return WienerReport(symbol=sym.name, sigma_fit=sig, sigma_prime_fit=sigp,
                        quasiconvex_integral=V[2], quasiconvex_increments=(inc1, inc2),
                        condition_decay=c1, condition_integrability=c2,
                        condition_quasiconvex=c3, overall=overall)
