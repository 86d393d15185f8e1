"""Batch front end.

Commands: solve, sweep, gamma, symbol-check, compare-kdv, probe-nonexistence,
solitary-limit.  Exit codes: 0 accepted outcome, 2 flagged or inconclusive
outcome, 1 error.  WAVELAB_OUT overrides --out, which overrides [output] dir.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys

import numpy as np

from . import __version__
from .errors import WavelabError
from .config import RunConfig, parse_config
from .grids import RealField
from .nonlinearity import n_eval
from .reporting import write_csv, write_json, write_svg_loglog
from .scaling import (
    SweepRow,
    auto_grid_rule,
    energy_gain_check,
    fit_exponent,
    gkdv_profile,
    gkdv_profile_compare,
    jensen_gamma,
    nonexistence_probe,
    sign_check,
    solitary_limit_check,
    sweep_mu,
)
from .solver import WaveSolution, long_wave_exponents, solve
from .symbols import apply_multiplier, kernel_sample, periodization_check, wiener_predicates

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2

_SWEEP_HEADER = ["mu", "P", "N", "nu", "sup_norm", "l2_norm", "hsp_norm", "E",
                 "residual_inf", "multiplier_gap", "min_u", "max_u", "tail_ratio",
                 "accepted", "flags"]


def _out_dir(args, cfg: RunConfig | None) -> str:
    env = os.environ.get("WAVELAB_OUT")
    if env:
        return env
    if args.out:
        return args.out
    if cfg is not None:
        return cfg.get("output", "dir")
    return "out"


def _metadata(cfg: RunConfig) -> dict:
    return {
        "config_hash": cfg.digest(),
        "config": cfg.normalize(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "wavelab_version": __version__,
        "numpy_version": np.__version__,
    }


def _solution_payload(sol: WaveSolution) -> dict:
    return {
        "nu": sol.nu, "mu": sol.mu, "P": sol.P, "N": sol.u.grid.N,
        "residual_inf": sol.residual_inf, "sup_norm": sol.sup_norm,
        "l2_norm": sol.l2_norm, "hsp_norm": sol.hsp_norm,
        "energy": {"L_part": sol.energy.L_part, "N_part": sol.energy.N_part,
                   "E": sol.energy.E, "Q": sol.energy.Q, "penalty": sol.energy.penalty},
        "penalty_active": sol.penalty_active, "cutoff_active": sol.cutoff_active,
        "multiplier_gap": sol.multiplier_gap, "supercritical": sol.supercritical,
        "nonconstant": sol.nonconstant, "accepted": sol.accepted,
        "pg_iterations": sol.pg_iterations, "newton_iterations": sol.newton_iterations,
        "flags": list(sol.flags),
    }


def _sweep_rows_csv(rows) -> list:
    return [[r.mu, r.P, r.N, r.nu, r.sup_norm, r.l2_norm, r.hsp_norm, r.E,
             r.residual_inf, r.multiplier_gap, r.min_u, r.max_u, r.tail_ratio,
             int(r.accepted), ";".join(r.flags)] for r in rows]


def cmd_solve(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    solve_cfg = cfg.build_solve_config()
    sol = solve(solve_cfg)
    grid = sol.u.grid
    Lu = apply_multiplier(sol.u, solve_cfg.sym)
    n_u = n_eval(solve_cfg.nl, sol.u.values, sol.mu) if solve_cfg.nl is not None \
        else np.zeros(grid.N)
    tag = cfg.digest()
    write_csv(os.path.join(out, f"solve_{tag}_profile.csv"),
              ["x", "u", "Lu", "n_u"],
              list(zip(grid.x, sol.u.values, Lu.values, n_u)))
    payload = _metadata(cfg)
    payload["solution"] = _solution_payload(sol)
    write_json(os.path.join(out, f"solve_{tag}_meta.json"), payload)
    return EXIT_OK if sol.accepted else EXIT_FLAGGED


def _fit_targets(q: float, ell: int) -> dict:
    alpha, _ = long_wave_exponents(q, ell)
    return {
        "nu": (q * alpha, max(0.07, 0.075 * q * alpha)),
        "sup_norm": (alpha, max(0.07, 0.10 * alpha)),
        "hsp_norm": (0.5, 0.05),
    }


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    ladder = cfg.mu_ladder()
    solve_cfg = cfg.build_solve_config(mu=ladder[0], pen_mu_max=max(ladder))
    rule = None
    if cfg.get_flag("sweep", "auto_p"):
        rule = auto_grid_rule(solve_cfg.sym, solve_cfg.nl, N=solve_cfg.grid.N,
                              P_min=solve_cfg.grid.P)
    sweep = sweep_mu(solve_cfg, ladder, grid_rule=rule)
    tag = cfg.digest()
    write_csv(os.path.join(out, f"sweep_{tag}_rows.csv"), _SWEEP_HEADER,
              _sweep_rows_csv(sweep.rows))

    targets = _fit_targets(sweep.q, sweep.ell)
    fit_rows = []
    fits = {}
    for quantity, (target, tol) in targets.items():
        fit = fit_exponent(sweep.rows, quantity, reference_m0=sweep.m0)
        fits[quantity] = fit
        fit_rows.append([fit.quantity, fit.slope, target, tol,
                         int(abs(fit.slope - target) <= tol)])
    write_csv(os.path.join(out, f"sweep_{tag}_fits.csv"),
              ["quantity", "slope", "target", "tolerance", "pass"], fit_rows)

    gain = energy_gain_check(sweep, solve_cfg.sym, solve_cfg.nl)
    payload = _metadata(cfg)
    payload["valid"] = sweep.valid
    payload["fits"] = {q: {"slope": f.slope, "intercept": f.intercept,
                           "residual_rms": f.residual_rms, "n_points": f.n_points}
                       for q, f in fits.items()}
    payload["energy_gain"] = {"g_min": gain.g_min, "g_max": gain.g_max,
                              "passed": gain.passed}
    write_json(os.path.join(out, f"sweep_{tag}_meta.json"), payload)

    if args.plots or cfg.get_flag("output", "plots"):
        acc = [r for r in sweep.rows if r.accepted]
        series = {
            "nu - m0": ([r.mu for r in acc], [r.nu - sweep.m0 for r in acc]),
            "sup norm": ([r.mu for r in acc], [r.sup_norm for r in acc]),
            "Hs norm": ([r.mu for r in acc], [r.hsp_norm for r in acc]),
        }
        fit_lines = {"nu - m0": (fits["nu"].slope, fits["nu"].intercept),
                     "sup norm": (fits["sup_norm"].slope, fits["sup_norm"].intercept),
                     "Hs norm": (fits["hsp_norm"].slope, fits["hsp_norm"].intercept)}
        write_svg_loglog(os.path.join(out, f"sweep_{tag}_scaling.svg"), series,
                         title="small-amplitude scaling", fit_lines=fit_lines)

    ok = sweep.valid and all(row[-1] == 1 for row in fit_rows)
    return EXIT_OK if ok else EXIT_FLAGGED


def cmd_gamma(args) -> int:
    value = jensen_gamma(args.q)
    print(f"{value:.12f}")
    return EXIT_OK


def cmd_symbol_check(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    sym = cfg.build_symbol()
    validation = sym.validate()
    rep = wiener_predicates(sym)
    ks = kernel_sample(sym, X=4 * cfg.get_float("grid", "P"), M=2**16)
    per = periodization_check(sym, cfg.build_grid(), ks)
    tag = cfg.digest()
    write_csv(os.path.join(out, f"symbol_{tag}_wiener.csv"),
              ["condition", "verdict", "detail"],
              [["derivative-decay", rep.condition_decay,
                f"sigma={rep.sigma_fit:.4f};sigma'={rep.sigma_prime_fit:.4f}"],
               ["integrability-pair", rep.condition_integrability, ""],
               ["quasi-convexity", rep.condition_quasiconvex,
                f"integral={rep.quasiconvex_integral:.6g}"],
               ["overall", rep.overall, ""]])
    payload = _metadata(cfg)
    payload["symbol"] = {"name": sym.name, "sigma": sym.sigma, "ell": sym.ell,
                         "m0": sym.m0, "d": sym.d}
    payload["validation"] = validation
    payload["wiener"] = {"sigma_fit": rep.sigma_fit, "sigma_prime_fit": rep.sigma_prime_fit,
                         "decay": rep.condition_decay,
                         "integrability": rep.condition_integrability,
                         "quasiconvex": rep.condition_quasiconvex, "overall": rep.overall}
    payload["kernel"] = {"l1_estimate": ks.l1_estimate, "tail_estimate": ks.tail_estimate,
                         "underresolved": ks.underresolved}
    payload["periodization"] = {"max_rel_deviation": per.max_rel_deviation,
                                "k_max": per.k_max, "aligned": per.aligned}
    write_json(os.path.join(out, f"symbol_{tag}_meta.json"), payload)
    return EXIT_OK if rep.overall == "pass" else EXIT_FLAGGED


def cmd_compare_kdv(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    solve_cfg = cfg.build_solve_config()
    sol = solve(solve_cfg)
    rep = gkdv_profile_compare(sol, solve_cfg.sym, solve_cfg.nl)
    tag = cfg.digest()
    payload = _metadata(cfg)
    payload["solution"] = _solution_payload(sol)
    payload["gkdv"] = {"applicable": rep.applicable, "reason": rep.reason,
                       "amplitude": rep.amplitude, "width_rate": rep.width_rate,
                       "ode_residual_max": rep.ode_residual_max,
                       "rel_l2_distance": rep.rel_l2_distance}
    write_json(os.path.join(out, f"gkdv_{tag}_meta.json"), payload)
    if rep.applicable:
        phi = gkdv_profile(sol.u.grid.x, sol.nu, solve_cfg.sym, solve_cfg.nl)
        write_csv(os.path.join(out, f"gkdv_{tag}_profiles.csv"),
                  ["x", "u", "sech_profile"],
                  list(zip(sol.u.grid.x, sol.u.values, phi)))
    return EXIT_OK if (sol.accepted and rep.applicable) else EXIT_FLAGGED


def cmd_probe_nonexistence(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    solve_cfg = cfg.build_solve_config(pen_mu_max=cfg.get_float("sweep", "mu_top"))
    rep = nonexistence_probe(solve_cfg, cfg.mu_ladder())
    tag = cfg.digest()
    write_csv(os.path.join(out, f"probe_{tag}_rows.csv"), _SWEEP_HEADER,
              _sweep_rows_csv(rep.rows))
    payload = _metadata(cfg)
    payload["probe"] = {"q": rep.q, "ell": rep.ell, "mode": rep.mode,
                        "verdict": rep.verdict,
                        "solitary_fraction": rep.solitary_fraction,
                        "alpha_fit_refused": rep.alpha_fit_refused,
                        "alpha_note": rep.alpha_note,
                        "amplitude_slope": rep.amplitude_slope,
                        "doubling_tails": list(rep.doubling_tails)}
    write_json(os.path.join(out, f"probe_{tag}_meta.json"), payload)
    return EXIT_OK if rep.verdict != "inconclusive" else EXIT_FLAGGED


def cmd_solitary_limit(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, cfg)
    solve_cfg = cfg.build_solve_config()
    rep = solitary_limit_check(solve_cfg, cfg.p_ladder(), jobs=args.jobs)
    tag = cfg.digest()
    rows = []
    for i, P in enumerate(rep.P_ladder):
        rows.append([P, rep.nus[i], rep.energies[i],
                     rep.nu_diffs[i - 1] if i > 0 else "",
                     rep.energy_diffs[i - 1] if i > 0 else "",
                     rep.tail_ratios[i]])
    write_csv(os.path.join(out, f"solitary_{tag}_ladder.csv"),
              ["P", "nu", "E", "nu_diff_rel", "E_diff_rel", "tail_ratio"], rows)
    payload = _metadata(cfg)
    payload["solitary_limit"] = {"passed": rep.passed, "nu_diffs": list(rep.nu_diffs),
                                 "energy_diffs": list(rep.energy_diffs),
                                 "tail_ratios": list(rep.tail_ratios)}
    write_json(os.path.join(out, f"solitary_{tag}_meta.json"), payload)
    return EXIT_OK if rep.passed else EXIT_FLAGGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavelab",
                                     description="traveling-wave solver and scaling lab "
                                                 "for Whitham-type dispersive equations")
    parser.add_argument("--version", action="version", version=f"wavelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_config=True):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers where supported")
        p.add_argument("--plots", action="store_true", help="emit SVG plots")
        p.set_defaults(fn=fn)
        return p

    add("solve", cmd_solve)
    add("sweep", cmd_sweep)
    g = add("gamma", cmd_gamma, needs_config=False)
    g.add_argument("q", type=float, help="growth exponent")
    add("symbol-check", cmd_symbol_check)
    add("compare-kdv", cmd_compare_kdv)
    add("probe-nonexistence", cmd_probe_nonexistence)
    add("solitary-limit", cmd_solitary_limit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except WavelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
