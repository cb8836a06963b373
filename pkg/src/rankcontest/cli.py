"""Command-line front end.

Every command reads a JSON market config and writes its reports into
``--out``. Exit codes: 0 ok, 2 config error, 3 unsupported case,
4 verification failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import load
from .equilibrium import solve_choice_profile, verify_equilibrium
from .exceptions import ConfigError, ContestError, UnsupportedCaseError
from .objectives import (
    EffortObjective,
    ParticipationObjective,
    best_response_participation,
    effort_utility,
    is_weight_monotone,
    participation_utility,
    solve_common_theta_spe,
)
from .prizes import PrizeStructure
from .simulation import EffortSchedule, GameConfig, best_response_gap, run_game

EXIT_OK, EXIT_CONFIG, EXIT_UNSUPPORTED, EXIT_VERIFY = 0, 2, 3, 4


class VerificationFailure(Exception):
    pass


def fmt(x):
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if obj != obj else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(path, report):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _report(cfg, command, body):
    return {"tool": "rankcontest", "version": __version__, "command": command,
            "config": cfg.to_dict(), **body}


def _profile(cfg):
    return solve_choice_profile(cfg.structures(), bisect_tol=cfg.solver.bisect_tol,
                                quad_tol=cfg.solver.quad_tol)


def _game(cfg):
    return GameConfig(cfg.n, cfg.distribution, tuple(cfg.structures()), tuple(cfg.objectives()),
                      replications=cfg.simulation.replications, seed=cfg.simulation.seed)


def cmd_solve(cfg, args):
    prof = _profile(cfg)
    grid = args.grid or cfg.solver.grid
    q = np.linspace(0.0, 1.0, grid)
    phi = prof.shares(q)
    cols, header = [q], ["q"]
    for j in range(cfg.m):
        beta = prof.effort(cfg.distribution, j, q)
        util = prof.interim_utility(cfg.distribution, j, q)
        cols += [phi[:, j], beta, util]
        header += [f"phi_{j + 1}", f"beta_{j + 1}", f"u_{j + 1}"]
    write_csv(os.path.join(args.out, "equilibrium.csv"), header, np.column_stack(cols).tolist())
    violation = verify_equilibrium(prof, activity_eps=cfg.solver.activity_eps)
    write_json(os.path.join(args.out, "equilibrium.json"), _report(cfg, "solve", {
        "grid": grid,
        "columns": header,
        "decreasing": [j + 1 for j in prof.decreasing],
        "constant": [j + 1 for j in prof.constant],
        "x_star": prof.x_star,
        "q_star": prof.q_star,
        "total_shares": prof.total_shares(),
        "violation": violation,
    }))
    return EXIT_OK


def cmd_utility(cfg, args):
    prof = _profile(cfg)
    curves = cfg.structures()
    rows = []
    for j, obj in enumerate(cfg.objectives()):
        if isinstance(obj, ParticipationObjective):
            u = participation_utility(j, curves, obj.theta, profile=prof)
        else:
            u = effort_utility(j, curves, cfg.distribution, obj.alpha, profile=prof)
        rows.append({"designer": j + 1, "objective": obj.to_dict(), "utility": u})
    write_json(os.path.join(args.out, "utility.json"), _report(cfg, "utility", {"designers": rows}))
    return EXIT_OK


def cmd_best_response(cfg, args):
    structures = cfg.structures()
    rows = []
    for j, (obj, spec) in enumerate(zip(cfg.objectives(), cfg.contests)):
        opp = structures[:j] + structures[j + 1:]
        if isinstance(obj, ParticipationObjective):
            br = best_response_participation(opp, obj.theta, spec.budget, cfg.n)
            rows.append({"designer": j + 1, "objective": obj.to_dict(), "k_star": br.k,
                         "prizes": br.structure.weights, "utility": br.utility,
                         "share": br.share, "ties": list(br.ties),
                         "xi_consistent": br.consistent})
        else:
            if not is_weight_monotone(obj.alpha, cfg.n):
                raise UnsupportedCaseError(
                    f"designer {j + 1}: best responses are only characterized for "
                    "weight-monotone effort weights"
                )
            if spec.budget <= 0:
                raise UnsupportedCaseError(f"designer {j + 1}: zero budget leaves no choice")
            wta = PrizeStructure.winner_take_all(spec.budget, cfg.n)
            u = effort_utility(0, [wta] + opp, cfg.distribution, obj.alpha)
            rows.append({"designer": j + 1, "objective": obj.to_dict(), "k_star": 1,
                         "prizes": wta.weights, "utility": u})
    write_json(os.path.join(args.out, "best_response.json"),
               _report(cfg, "best-response", {"designers": rows}))
    return EXIT_OK


def cmd_spe(cfg, args):
    objs = cfg.objectives()
    if not all(isinstance(o, ParticipationObjective) for o in objs):
        raise UnsupportedCaseError(
            "the designers' equilibrium is only computed when every designer has a "
            "participation objective (common-threshold scope)"
        )
    thetas = {o.theta for o in objs}
    if len(thetas) != 1:
        raise UnsupportedCaseError(
            f"designers use different thresholds {sorted(thetas)}; the equilibrium is "
            "only characterized for a common threshold"
        )
    sol = solve_common_theta_spe([c.budget for c in cfg.contests], thetas.pop(), cfg.n)
    write_json(os.path.join(args.out, "spe.json"), _report(cfg, "spe", sol.to_dict()))
    return EXIT_OK


def cmd_simulate(cfg, args):
    cfg = cfg.with_simulation(replications=args.replications, seed=args.seed)
    prof = _profile(cfg)
    rep = run_game(_game(cfg), prof, workers=args.workers or cfg.simulation.workers)
    body = rep.to_dict()
    write_json(os.path.join(args.out, "simulation.json"), _report(cfg, "simulate", body))
    rows = [[j + 1, rep.designer_utility[j], rep.designer_ci[j], rep.participation[j],
             rep.participation_ci[j]] for j in range(cfg.m)]
    write_csv(os.path.join(args.out, "simulation.csv"),
              ["designer", "utility", "ci95", "participants", "participants_ci95"], rows)
    rows = [[rep.interim_q[i], rep.interim_utility[i], rep.interim_ci[i]]
            for i in range(rep.interim_q.size)]
    write_csv(os.path.join(args.out, "interim.csv"), ["q", "utility", "ci95"], rows)
    return EXIT_OK


def cmd_verify(cfg, args):
    cfg = cfg.with_simulation(seed=args.seed)
    tol = args.tol if args.tol is not None else 1e-6
    samples = args.replications or cfg.simulation.samples
    prof = _profile(cfg)
    violation = verify_equilibrium(prof, activity_eps=cfg.solver.activity_eps)
    game = _game(cfg)
    gap = best_response_gap(game, prof, EffortSchedule(prof, cfg.distribution),
                            probes=cfg.simulation.probe_quantiles,
                            effort_grid=cfg.simulation.effort_grid, samples=samples)
    ok = violation <= tol and gap.epsilon <= cfg.simulation.gap_tol
    write_json(os.path.join(args.out, "verify.json"), _report(cfg, "verify", {
        "violation": violation,
        "tol": tol,
        "epsilon": gap.epsilon,
        "gap_tol": cfg.simulation.gap_tol,
        "samples": samples,
        "probes": gap.probes,
        "equilibrium_utility": gap.equilibrium,
        "best_deviation_utility": gap.best,
        "best_deviation": [list(mv) for mv in gap.best_move],
        "passed": ok,
    }))
    if not ok:
        raise VerificationFailure(
            f"equilibrium check failed: violation={violation:.3g} (tol {tol:g}), "
            f"epsilon={gap.epsilon:.3g} (tol {cfg.simulation.gap_tol:g})"
        )
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "utility": cmd_utility,
    "best-response": cmd_best_response,
    "spe": cmd_spe,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser():
    p = argparse.ArgumentParser(prog="rankcontest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("config", help="path to the JSON market config")
        s.add_argument("--out", default=".", help="output directory (created if missing)")
        s.add_argument("--grid", type=int, help="quantile grid size for solve")
        s.add_argument("--seed", type=int, help="override the simulation seed")
        s.add_argument("--replications", type=int,
                       help="replications for simulate, samples per probe for verify")
        s.add_argument("--tol", type=float, help="equilibrium violation tolerance for verify")
        s.add_argument("--workers", type=int, help="worker threads for simulate")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.grid is not None and args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        if args.replications is not None and args.replications < 1:
            raise ConfigError("--replications must be at least 1")
        cfg = load(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedCaseError as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except VerificationFailure as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except ContestError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
