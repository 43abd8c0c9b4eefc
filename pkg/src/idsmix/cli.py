"""Command-line entry point.

Exit codes: 0 success, 1 configuration/model error, 2 solver failure,
3 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .best_response import check_assumption4
from .config import RunConfig, load_config
from .equilibrium import solve_equilibrium
from .errors import ConfigError, InvariantViolation, ModelError, SolverError
from .mixing_analysis import PAIRINGS, transfer_sequence
from .model import make_rho_mixing
from .sweeps import (
    SweepSpec,
    emit_outputs,
    run_figure2_sweep,
    run_figure3_sweep,
    run_from_manifest,
    sweep_manifest,
)
from .validation_sim import sample_network, simulate_first_hop

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [None if np.isnan(v) else float(v) for v in x.ravel()] if x.dtype.kind == "f" else x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def cmd_solve(cfg: RunConfig, args) -> int:
    game = cfg.game(gamma=args.gamma, rho=args.rho)
    res = solve_equilibrium(game)
    _dump({
        "gamma": args.gamma if args.gamma is not None else cfg.gamma,
        "rho": args.rho if args.rho is not None else cfg.rho,
        "e_avg_star": res.e_avg_star,
        "e_d": res.e_d,
        "investments": res.investments.investments,
        "p_star_d": res.p_star_d,
        "residual": res.residual,
        "interior_all": res.interior_all,
        "sign_changes": res.sign_changes,
    })
    return EXIT_OK


def _sweep(kind: str, cfg: RunConfig, args) -> int:
    if args.manifest:
        kind_m, rows = run_from_manifest(args.manifest, workers=args.workers)
        if kind_m != kind:
            raise ConfigError(f"manifest is for {kind_m}, not {kind}")
        spec = SweepSpec.from_dict(json.loads(Path(args.manifest).read_text())["spec"])
    else:
        spec = SweepSpec.from_config(cfg, workers=args.workers)
        rows = run_figure2_sweep(spec) if kind == "fig2" else run_figure3_sweep(spec)
    out = Path(args.output_dir) / f"{kind}.csv"
    written = emit_outputs(rows, out, sweep_manifest(kind, spec, args.seed), svg=args.svg)
    for p in written:
        print(p)
    bad = [r for r in rows if not r.interior_all]
    if bad:
        print(f"warning: {len(bad)} cells have a boundary equilibrium", file=sys.stderr)
    return EXIT_OK


def cmd_transfer_demo(cfg: RunConfig, args) -> int:
    game = cfg.game(gamma=args.gamma)
    pop = game.pop
    g_from = make_rho_mixing(pop, args.rho_from)
    g_to = make_rho_mixing(pop, args.rho_to)
    steps = transfer_sequence(pop, g_from, g_to, game=game, max_substep=args.max_substep,
                              pairing=args.pairing)
    _dump({
        "rho_from": args.rho_from,
        "rho_to": args.rho_to,
        "steps": [
            {"d1": s.d1, "d2": s.d2, "delta": s.delta, "decrease": s.decrease,
             "are_after": s.are_path[-1] if s.are_path else None}
            for s in steps
        ],
    })
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    game = cfg.game(gamma=args.gamma, rho=args.rho)
    res = solve_equilibrium(game)
    n = args.n or cfg.n_agents
    reps = args.reps or cfg.reps
    net = sample_network(game.pop, n, args.seed)
    out = simulate_first_hop(net, game.threat, game.curve, res.investments, reps, args.seed, pop=game.pop)
    within = abs(out.first_hop_attacks_per_agent - out.expected) <= 3 * out.std_error
    _dump({
        "n": n,
        "reps": reps,
        "seed": args.seed,
        "first_hop_attacks_per_agent": out.first_hop_attacks_per_agent,
        "std_error": out.std_error,
        "expected": out.expected,
        "realized_expected": out.realized_expected,
        "within_3_se": bool(within),
        "per_degree_direct_infection": out.per_degree_direct_infection,
    })
    return EXIT_OK if within else EXIT_INVARIANT


def cmd_check_assumptions(cfg: RunConfig, args) -> int:
    game = cfg.game(gamma=args.gamma, rho=0.0)
    report = check_assumption4(game.brc, grid_size=args.grid_size)
    res = solve_equilibrium(game)
    _dump({
        "curve": game.curve.family,
        "r_min": game.brc.r_min,
        "r_max": game.brc.r_max,
        "assumption4": report.passed,
        "assumption4_violation": report.violation,
        "neutral_equilibrium_interior": res.interior_all,
    })
    return EXIT_OK if report.passed and res.interior_all else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idsmix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--output-dir", default=".", help="directory for CSV/SVG/manifest")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--power-form", choices=("exact", "omit_gamma"),
                        help="power-family closed form (overrides the config file)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one equilibrium")
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float)
    p.set_defaults(func=cmd_solve)

    for name, kind in (("sweep-fig2", "fig2"), ("sweep-fig3", "fig3")):
        p = sub.add_parser(name, help=f"run the {kind} sweep and write CSV + manifest")
        p.add_argument("--svg", action="store_true", help="also write an SVG chart")
        p.add_argument("--manifest", help="re-run from a previously written manifest")
        p.set_defaults(func=lambda cfg, args, kind=kind: _sweep(kind, cfg, args))

    p = sub.add_parser("transfer-demo", help="walk g(rho_from) to g(rho_to) by risk transfers")
    p.add_argument("--rho-from", type=float, default=-0.3)
    p.add_argument("--rho-to", type=float, default=0.3)
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-substep", type=float, default=0.05)
    p.add_argument("--pairing", choices=PAIRINGS, default="published")
    p.set_defaults(func=cmd_transfer_demo)

    p = sub.add_parser("simulate", help="Monte Carlo first-hop check at the equilibrium")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-assumptions", help="check the p* regularity assumption")
    p.add_argument("--gamma", type=float)
    p.add_argument("--grid-size", type=int, default=200)
    p.set_defaults(func=cmd_check_assumptions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.power_form:
            cfg = dataclasses.replace(cfg, power_form=args.power_form)
        return args.func(cfg, args)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
