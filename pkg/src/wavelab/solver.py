"""Traveling-wave solver: seeded descent on the charge sphere plus Newton refinement.

Pipeline: the sinusoidal seed (exactly on Q = mu) is driven downhill by a
projected Barzilai-Borwein gradient method with Armijo backtracking and exact
renormalization to the sphere after every step; the wave speed is recovered as
the Lagrange multiplier; and the pair (u, nu) is polished by a bordered Newton
iteration on

    F(u, nu) = (Lu - nu*u + n(u),  Q(u) - mu) = 0,

whose linearization is solved by preconditioned GMRES with the diagonal
dispersion part (m(xi) - nu)^{-1} as the preconditioner.  The translation
degeneracy is pinned by centering the profile extremum at x = 0 and keeping
iterates even, which is exact on the symmetric grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConfigurationError, DomainError, SolverFailure
from .functionals import (
    EnergyBreakdown,
    PenalizerSpec,
    energy,
    gradient,
    multiplier,
    quadratic_charge,
)
from .grids import PeriodicGrid, RealField, hsp_norm, l2_inner, l2_norm, to_spectral
from .nonlinearity import NonlinearitySpec, n_eval, n_prime
from .symbols import SymbolSpec

__all__ = [
    "PGParams",
    "NewtonParams",
    "SolveConfig",
    "WaveSolution",
    "PGInfo",
    "long_wave_exponents",
    "default_penalizer",
    "initial_guess",
    "projected_gradient",
    "newton_refine",
    "solve",
    "continue_in_mu",
]

log = logging.getLogger(__name__)

NONCONSTANCY_REL = 1e-6


def long_wave_exponents(q: float, ell: int) -> tuple[float, float]:
    """(alpha, beta) of the long-wave scaling mu^alpha u(mu^beta x)."""
    if q >= 4 * ell:
        raise DomainError(f"long-wave exponents diverge for q={q} >= 4*ell={4 * ell}")
    return 2.0 * ell / (4 * ell - q), q / (4 * ell - q)


def default_penalizer(mu_max: float, s: float = 1.0) -> PenalizerSpec:
    """Ball radius 10*sqrt(2*mu_max): far outside converged solutions, so the
    barrier never activates on accepted branches but still guards descent."""
    return PenalizerSpec(R=10.0 * np.sqrt(2.0 * mu_max), s=s)


@dataclass(frozen=True)
class PGParams:
    max_iter: int = 4000
    tol: Optional[float] = None  # None: 1e-6 * sqrt(2*mu)
    tau_init: float = 1.0
    tau_min: float = 1e-14
    tau_max: float = 1e4
    armijo: float = 1e-4

    def tolerance(self, mu: float) -> float:
        return self.tol if self.tol is not None else 1e-6 * np.sqrt(2.0 * mu)


@dataclass(frozen=True)
class NewtonParams:
    max_iter: int = 30
    accept_tol: float = 1e-10  # scaled by max(1, ||u||_inf)
    target_tol: float = 1e-13
    gmres_rtol_floor: float = 1e-13
    gmres_maxiter: int = 600


@dataclass(frozen=True)
class SolveConfig:
    mu: float
    grid: PeriodicGrid
    sym: SymbolSpec
    nl: Optional[NonlinearitySpec]
    s: float = 1.0
    pen: Optional[PenalizerSpec] = None
    pg: PGParams = field(default_factory=PGParams)
    newton: NewtonParams = field(default_factory=NewtonParams)

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise DomainError(f"constraint level must be positive, got mu={self.mu}")

    def with_penalizer(self) -> "SolveConfig":
        if self.pen is not None:
            return self
        return replace(self, pen=default_penalizer(self.mu, self.s))


@dataclass(frozen=True)
class PGInfo:
    iterations: int
    accepted_steps: int
    tangent_norm: float
    energy_initial: float
    energy_final: float
    converged: bool
    step_collapsed: bool


@dataclass(frozen=True)
class WaveSolution:
    u: RealField
    nu: float
    mu: float
    P: float
    residual_inf: float
    energy: EnergyBreakdown
    sup_norm: float
    l2_norm: float
    hsp_norm: float
    penalty_active: bool
    cutoff_active: bool
    cutoff_margin: float  # A_mu / ||u||_inf; inf when cutoff disabled
    pg_iterations: int
    newton_iterations: int
    newton_residuals: tuple
    multiplier_gap: float
    nonconstant: bool
    supercritical: bool
    accepted: bool
    flags: tuple


def initial_guess(mu: float, grid: PeriodicGrid, gamma: float) -> RealField:
    """Sinusoidal seed A*sign(gamma)*sqrt(2/3)*(1 + sin(2*pi*x/P)) with A = sqrt(2*mu/P).

    Its only nonzero coefficients are at k = 0, +-1 and its charge is exactly mu.
    """
    if not mu > 0:
        raise DomainError(f"seed needs mu > 0, got {mu}")
    A = np.sqrt(2.0 * mu / grid.P)
    vals = A * np.sign(gamma) * np.sqrt(2.0 / 3.0) * (1.0 + np.sin(2 * np.pi * grid.x / grid.P))
    return RealField(grid, vals)


def _renormalize(vals: np.ndarray, grid: PeriodicGrid, mu: float) -> np.ndarray:
    norm = np.sqrt(grid.dx * np.sum(vals**2))
    if norm == 0.0:
        raise SolverFailure("cannot renormalize the zero field onto the sphere")
    return vals * (np.sqrt(2.0 * mu) / norm)


def _symmetrize(vals: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    return 0.5 * (vals + vals[grid._reflect_idx])


def center_profile(u: RealField, gamma: float = 1.0) -> RealField:
    """Roll the extremum of sign(gamma)*(u - mean) to the grid point x = 0."""
    dev = np.sign(gamma) * (u.values - np.mean(u.values))
    j_star = int(np.argmax(dev))
    j_zero = u.grid.N // 2  # index of x = 0
    return RealField(u.grid, np.roll(u.values, j_zero - j_star))


def projected_gradient(u0: RealField, cfg: SolveConfig) -> tuple[RealField, PGInfo]:
    """Minimize the (penalized) energy over the sphere Q = mu by BB descent.

    Steps move along the tangent component of the gradient and retract by exact
    renormalization; accepted steps never increase the energy (Armijo backtracking).
    """
    grid, mu = cfg.grid, cfg.mu
    p = cfg.pg
    tol = p.tolerance(mu)
    u = _renormalize(u0.values.copy(), grid, mu)

    def total_energy(vals):
        try:
            return energy(RealField(grid, vals), cfg.sym, cfg.nl, mu, pen=cfg.pen, s=cfg.s).total
        except DomainError:
            return np.inf  # trial beyond the penalizer pole: reject, backtrack

    def tangent_grad(vals):
        g = gradient(RealField(grid, vals), cfg.sym, cfg.nl, mu, pen=cfg.pen).values
        return g - (grid.dx * np.sum(g * vals) / (2.0 * mu)) * vals

    E = total_energy(u)
    E0 = E
    gt = tangent_grad(u)
    gt_norm = np.sqrt(grid.dx * np.sum(gt**2))
    tau = p.tau_init
    accepted = 0
    collapsed = False
    it = 0
    for it in range(p.max_iter):
        if gt_norm <= tol:
            break
        gt_sq = grid.dx * np.sum(gt**2)
        step = tau
        while True:
            trial = _renormalize(u - step * gt, grid, mu)
            E_trial = total_energy(trial)
            if E_trial <= E - p.armijo * step * gt_sq:
                break
            step *= 0.5
            if step < p.tau_min:
                collapsed = True
                break
        if collapsed:
            break
        s_vec = trial - u
        u, E = trial, E_trial
        accepted += 1
        gt_new = tangent_grad(u)
        y_vec = gt_new - gt
        sy = grid.dx * np.sum(s_vec * y_vec)
        ss = grid.dx * np.sum(s_vec * s_vec)
        tau = min(max(ss / sy, p.tau_min), p.tau_max) if sy > 0 else min(4 * step, p.tau_max)
        gt = gt_new
        gt_norm = np.sqrt(grid.dx * np.sum(gt**2))
    info = PGInfo(iterations=it, accepted_steps=accepted, tangent_norm=float(gt_norm),
                  energy_initial=float(E0), energy_final=float(E),
                  converged=bool(gt_norm <= tol), step_collapsed=collapsed)
    if collapsed:
        log.warning("projected gradient: step collapsed after %d accepted steps "
                    "(tangent norm %.3g, tol %.3g)", accepted, gt_norm, tol)
    return RealField(grid, u), info


def _newton_residual(vals, nu, cfg):
    grid = cfg.grid
    c = (np.sqrt(grid.P) / grid.N) * grid._phase * np.fft.fft(vals)
    Lu = (np.fft.ifft(cfg.sym(grid.xi) * c / grid._phase) * (grid.N / np.sqrt(grid.P))).real
    r = Lu - nu * vals
    if cfg.nl is not None:
        r = r + n_eval(cfg.nl, vals, cfg.mu)
    return r


def newton_refine(u0: RealField, nu0: float, cfg: SolveConfig,
                  symmetric: Optional[bool] = None) -> tuple[RealField, float, tuple, bool]:
    """Bordered Newton for (Lu - nu*u + n(u), Q(u) - mu) = 0.

    Returns (u, nu, residual history, success).  The linearization
    A = L - nu + n'(u) is applied spectrally and inverted by GMRES with the
    diagonal (m - nu)^{-1} preconditioner; the constraint row is eliminated by
    a Schur complement (two solves per step).  When the iterate is close to an
    even profile, iterates are projected onto the even subspace, which removes
    the translation-mode near-kernel from the solve.
    """
    grid, mu = cfg.grid, cfg.mu
    nt = cfg.newton
    u = u0.values.copy()
    nu = float(nu0)

    if symmetric is None:
        defect = np.max(np.abs(u - u[grid._reflect_idx])) / max(np.max(np.abs(u)), 1e-300)
        symmetric = bool(defect < 0.1)
    if symmetric:
        u = _symmetrize(u, grid)

    sqrtP = np.sqrt(grid.P)
    phase = grid._phase
    mvals = cfg.sym(grid.xi)

    # Restricting the Krylov space to even fields removes the translation-mode
    # near-kernel of A; rounding noise in the odd subspace would otherwise be
    # amplified by the nearly singular odd block and stall GMRES.
    project = (lambda v: _symmetrize(v, grid)) if symmetric else (lambda v: v)

    def apply_A(v, nprime_vals, nu_loc):
        v = project(v)
        c = (sqrtP / grid.N) * phase * np.fft.fft(v)
        Lv = (np.fft.ifft(mvals * c / phase) * (grid.N / sqrtP)).real
        out = Lv - nu_loc * v
        if nprime_vals is not None:
            out = out + nprime_vals * v
        return out

    def solve_A(rhs, nprime_vals, nu_loc, rtol):
        denom = mvals - nu_loc
        small = np.abs(denom) < 1e-8 * max(1.0, abs(nu_loc))
        denom = np.where(small, np.where(denom >= 0, 1.0, -1.0) * 1e-8 * max(1.0, abs(nu_loc)),
                         denom)

        def precond(v):
            v = project(v)
            c = (sqrtP / grid.N) * phase * np.fft.fft(v)
            return (np.fft.ifft((c / denom) / phase) * (grid.N / sqrtP)).real

        A_op = LinearOperator((grid.N, grid.N),
                              matvec=lambda v: apply_A(v, nprime_vals, nu_loc))
        M_op = LinearOperator((grid.N, grid.N), matvec=precond)
        x, code = gmres(A_op, project(rhs), M=M_op, rtol=rtol, atol=0.0,
                        maxiter=nt.gmres_maxiter, restart=min(grid.N, 300))
        if code != 0:
            raise SolverFailure(f"GMRES stagnated (code {code}) at nu={nu_loc:.6g}")
        return project(x)

    def combined(res_inf_loc, r2_loc, u_loc):
        # equation residual and charge defect on a common relative scale
        scale = max(1.0, float(np.max(np.abs(u_loc))))
        return max(res_inf_loc / scale, abs(r2_loc) / mu)

    history = []
    res = _newton_residual(u, nu, cfg)
    res_inf = float(np.max(np.abs(res)))
    r2 = quadratic_charge(RealField(grid, u)) - mu
    comb = combined(res_inf, r2, u)
    history.append(res_inf)
    comb0 = max(comb, 1e-300)
    success = False
    for _ in range(nt.max_iter):
        if comb <= nt.target_tol:
            success = True
            break
        nprime_vals = n_prime(cfg.nl, u, mu) if cfg.nl is not None else None
        rtol = max(nt.gmres_rtol_floor, min(1e-2, 0.01 * comb / comb0))
        try:
            a = solve_A(res, nprime_vals, nu, rtol)
            b = solve_A(u, nprime_vals, nu, rtol)
        except SolverFailure:
            break
        ub = grid.dx * np.sum(u * b)
        if ub == 0.0:
            break
        dnu = (grid.dx * np.sum(u * a) - r2) / ub
        du = dnu * b - a
        # damped fallback if the full step increases the residual badly
        t = 1.0
        for _ in range(5):
            u_try = u + t * du
            if symmetric:
                u_try = _symmetrize(u_try, grid)
            nu_try = nu + t * dnu
            res_try = _newton_residual(u_try, nu_try, cfg)
            res_try_inf = float(np.max(np.abs(res_try)))
            r2_try = quadratic_charge(RealField(grid, u_try)) - mu
            comb_try = combined(res_try_inf, r2_try, u_try)
            if comb_try < comb or t < 1e-2:
                break
            t *= 0.5
        if comb_try >= comb:
            break  # stagnation: return best so far
        u, nu, res, res_inf, r2, comb = u_try, nu_try, res_try, res_try_inf, r2_try, comb_try
        history.append(res_inf)
    scale = max(1.0, float(np.max(np.abs(u))))
    success = success or (res_inf <= nt.accept_tol * scale and abs(r2) <= 1e-11 * mu)
    return RealField(grid, u), nu, tuple(history), bool(success)


def _diagnose(u: RealField, nu: float, cfg: SolveConfig, pg_info: Optional[PGInfo],
              history: tuple, newton_ok: bool) -> WaveSolution:
    grid, mu = cfg.grid, cfg.mu
    res = _newton_residual(u.values, nu, cfg)
    res_inf = float(np.max(np.abs(res)))
    eb = energy(u, cfg.sym, cfg.nl, mu, pen=cfg.pen, s=cfg.s)
    sup = float(np.max(np.abs(u.values)))
    l2 = l2_norm(u)
    hsp = hsp_norm(u, cfg.s)
    penalty_active = bool(eb.penalty > 0.0)
    if cfg.nl is not None and cfg.nl.cutoff.enabled:
        A = cfg.nl.cutoff.amplitude(mu)
        cutoff_active = bool(sup > A)
        cutoff_margin = A / sup if sup > 0 else np.inf
    else:
        cutoff_active = False
        cutoff_margin = np.inf
    mean = float(np.mean(u.values))
    dev = l2_norm(RealField(grid, u.values - mean))
    nonconstant = bool(dev > NONCONSTANCY_REL * max(l2, 1e-300))
    try:
        nu_re = multiplier(u, cfg.sym, cfg.nl, mu, pen=cfg.pen)
        multiplier_gap = abs(nu_re - nu) / max(abs(nu), 1e-300)
    except DomainError:
        multiplier_gap = np.inf
    supercritical = bool(nu > cfg.sym.m0)
    flags = []
    if pg_info is not None and pg_info.step_collapsed:
        flags.append("pg-step-collapse")
    if not newton_ok:
        flags.append("newton-failure")
    if penalty_active:
        flags.append("penalty-active")
    if cutoff_active:
        flags.append("cutoff-active")
    if not nonconstant:
        flags.append("trivial-branch")
    if not supercritical:
        flags.append("subcritical")
    accepted = bool(newton_ok and nonconstant and not penalty_active and not cutoff_active)
    return WaveSolution(
        u=u, nu=nu, mu=mu, P=grid.P, residual_inf=res_inf, energy=eb, sup_norm=sup,
        l2_norm=l2, hsp_norm=hsp, penalty_active=penalty_active,
        cutoff_active=cutoff_active, cutoff_margin=cutoff_margin,
        pg_iterations=pg_info.iterations if pg_info else 0,
        newton_iterations=max(len(history) - 1, 0), newton_residuals=history,
        multiplier_gap=multiplier_gap, nonconstant=nonconstant,
        supercritical=supercritical, accepted=accepted, flags=tuple(flags),
    )


def refine_from(u: RealField, cfg: SolveConfig, pg_info: Optional[PGInfo] = None,
                gamma: Optional[float] = None) -> WaveSolution:
    """Center, symmetrize, renormalize, recover the multiplier and Newton-polish."""
    grid, mu = cfg.grid, cfg.mu
    gam = gamma if gamma is not None else (cfg.nl.gamma if cfg.nl is not None else 1.0)
    centered = center_profile(u, gam)
    vals = _symmetrize(centered.values, grid)
    vals = _renormalize(vals, grid, mu)
    u_c = RealField(grid, vals)
    nu0 = multiplier(u_c, cfg.sym, cfg.nl, mu, pen=cfg.pen)
    u_n, nu, history, ok = newton_refine(u_c, nu0, cfg, symmetric=True)
    u_n = center_profile(u_n, gam)  # grid roll only; evenness keeps this a no-op in general
    return _diagnose(u_n, nu, cfg, pg_info, history, ok)


def solve(cfg: SolveConfig) -> WaveSolution:
    """Seed, descend, refine, diagnose.  Flagged outcomes are returned, not raised."""
    cfg = cfg.with_penalizer()
    gam = cfg.nl.gamma if cfg.nl is not None else 1.0
    u0 = initial_guess(cfg.mu, cfg.grid, gam)
    u_pg, info = projected_gradient(u0, cfg)
    sol = refine_from(u_pg, cfg, pg_info=info, gamma=gam)
    if not sol.accepted:
        log.info("solve(mu=%.3g, P=%g): flagged %s", cfg.mu, cfg.grid.P, sol.flags)
    return sol


def _resample_scaled(u: RealField, new_grid: PeriodicGrid, ratio_alpha: float,
                     ratio_beta: float) -> np.ndarray:
    """Evaluate ratio^alpha * u(ratio^beta * x) on new_grid by trigonometric evaluation.

    Arguments map into the source period when possible; if the target window is
    wider than one source period the localized profile is zero-extended instead
    of wrapped.
    """
    src = u.grid
    c = to_spectral(u).coeffs
    active = np.abs(c) > 1e-15 * max(float(np.max(np.abs(c))), 1e-300)
    ks = src.k[active]
    cs = c[active]
    x_args = ratio_beta * new_grid.x
    wrap_ok = ratio_beta * new_grid.P <= src.P * (1 + 1e-12)
    phases = np.exp((2j * np.pi / src.P) * np.outer(x_args, ks))
    vals = (phases @ cs).real / np.sqrt(src.P)
    if not wrap_ok:
        vals = np.where(np.abs(x_args) <= src.P / 2, vals, 0.0)
    return ratio_alpha * vals


def continue_in_mu(sol: WaveSolution, mu_new: float, cfg: SolveConfig) -> WaveSolution:
    """Warm-started continuation using the long-wave rescaling of the converged profile.

    The warm start is (mu_new/mu)^alpha u((mu_new/mu)^beta x) resampled onto the
    target grid, renormalized to Q = mu_new, then Newton-refined.  Falls back to
    a cold solve when the scaling is unavailable (q >= 4*ell) or Newton fails.
    """
    if cfg.mu != mu_new:
        cfg = replace(cfg, mu=mu_new)
    cfg = cfg.with_penalizer()
    ratio = mu_new / sol.mu
    if not 0.25 <= ratio <= 4.0:
        raise ConfigurationError(
            f"continuation ratio {ratio:.3g} outside [1/4, 4]; build a ladder instead")
    gam = cfg.nl.gamma if cfg.nl is not None else 1.0
    try:
        alpha, beta = long_wave_exponents(cfg.nl.q if cfg.nl is not None else 1.0, cfg.sym.ell)
    except DomainError:
        log.info("continuation: no long-wave scaling at q >= 4*ell; cold solve")
        return solve(cfg)
    try:
        vals = _resample_scaled(sol.u, cfg.grid, ratio**alpha, ratio**beta)
        vals = _renormalize(vals, cfg.grid, mu_new)
        warm = RealField(cfg.grid, vals)
        out = refine_from(warm, cfg, gamma=gam)
        if out.accepted or out.residual_inf <= cfg.newton.accept_tol * max(1.0, out.sup_norm):
            return out
        log.info("continuation to mu=%.3g not accepted (%s); cold fallback", mu_new, out.flags)
    except (SolverFailure, DomainError) as exc:
        log.info("continuation to mu=%.3g failed (%s); cold fallback", mu_new, exc)
    return solve(cfg)
