"""Command-line front end.

Subcommands
    solve-rvi       damped relative value iteration on a gridded model
    solve-pi        Howard policy iteration with on-the-fly transitions
    steady-state    action sweep of the stationary gain (CSV)
    dual-bound      gamma scan of steady-state gain, dual bounds and solver gain
    cycle-scan      (s, S, tau) promotion-cycle scan for the 1-D toy model
    verify-example  residuals of the closed-form eigenvectors of the counterexample
    bench           node/arc counts, sweep counts, wall time and accounted memory

Exit codes: 0 success, 2 configuration error, 3 solver did not converge.
Output CSVs start with one timestamped comment line; everything after it is
deterministic for a fixed config and seed, independent of the thread knob.
"""

import argparse
import csv
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import verification
from .config import ConfigError, load_config
from .cycles import ToyModel, scan_sSt, steady_state_gain
from .duality import dual_bound, power_phi
from .howard import build_local_tables, memory_report, policy_cycles, solve_howard
from .model import check_assumptions
from .rvi import GridBellman, solve_rvi
from .simplex import SimplexGrid
from .steady import optimal_steady_state, stationary_distribution

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNCONVERGED = 3


def _set_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def _open_csv(path, tool):
    fh = open(path, "w", newline="", encoding="utf-8")
    fh.write(f"# simplexmdp {tool} generated {datetime.now(timezone.utc).isoformat()}\n")
    return fh, csv.writer(fh)


def _grid_for(cfg, args):
    res = getattr(args, "grid_res", None) or cfg.grid_resolution
    if res is None:
        raise ConfigError("$.grid.resolution", "missing (set it or pass --grid-res)")
    model = cfg.build_model()
    return model, SimplexGrid(model.n_states, res)


def _cmd_solve_rvi(args):
    cfg = load_config(args.config)
    model, grid = _grid_for(cfg, args)
    eps = args.eps if args.eps is not None else cfg.eps
    max_iter = args.max_iter if args.max_iter is not None else cfg.max_iter
    t0 = time.perf_counter()
    sol = solve_rvi(model, grid, eps=eps, max_iter=max_iter)
    elapsed = time.perf_counter() - t0
    print(f"gain={sol.gain:.10f} iterations={sol.iterations} "
          f"span={sol.span:.3e} converged={sol.converged} time={elapsed:.2f}s")
    if args.out:
        fh, w = _open_csv(args.out, "solve-rvi")
        w.writerow(["gain", "iterations", "span", "converged", "grid_res", "eps"])
        w.writerow([f"{sol.gain:.12g}", sol.iterations, f"{sol.span:.6g}",
                    int(sol.converged), grid.resolution, f"{eps:.6g}"])
        if args.dump_bias:
            w.writerow([])
            w.writerow([f"i{k+1}" for k in range(model.n_clusters)]
                       + ["bias", "action_index"])
            flat_bias = sol.bias.ravel()
            flat_pol = sol.policy.ravel()
            for i in range(flat_bias.size):
                gi = np.unravel_index(i, sol.bias.shape)
                w.writerow(list(gi) + [f"{flat_bias[i]:.12g}", int(flat_pol[i])])
        fh.close()
    return EXIT_OK if sol.converged else EXIT_UNCONVERGED


def _cmd_solve_pi(args):
    cfg = load_config(args.config)
    model, grid = _grid_for(cfg, args)
    max_iters = args.max_pi_iters if args.max_pi_iters is not None else cfg.max_pi_iters
    t0 = time.perf_counter()
    tables = build_local_tables(model, grid)
    sol = solve_howard(model, grid, max_iters=max_iters, tables=tables)
    elapsed = time.perf_counter() - t0
    cycles = policy_cycles(sol.graph)
    top = max(cycles, key=lambda c: c.gain)
    print(f"gain={sol.gain:.10f} iterations={sol.iterations} "
          f"cycles={len(cycles)} best_period={top.length} "
          f"converged={sol.converged} time={elapsed:.2f}s")
    if args.out:
        fh, w = _open_csv(args.out, "solve-pi")
        w.writerow(["gain", "iterations", "cycles", "best_period", "converged",
                    "grid_res"])
        w.writerow([f"{sol.gain:.12g}", sol.iterations, len(cycles), top.length,
                    int(sol.converged), grid.resolution])
        fh.close()
    if args.dump_policy:
        fh, w = _open_csv(args.dump_policy, "solve-pi policy")
        w.writerow([f"i{k+1}" for k in range(model.n_clusters)]
                   + ["action_index", "successor", "gain", "bias"])
        succ = sol.graph.successor
        flat_pol = sol.policy.ravel()
        flat_gain = sol.node_gains.ravel()
        flat_bias = sol.bias.ravel()
        for i in range(flat_pol.size):
            gi = np.unravel_index(i, sol.policy.shape)
            w.writerow(list(gi) + [int(flat_pol[i]), int(succ[i]),
                                   f"{flat_gain[i]:.12g}", f"{flat_bias[i]:.12g}"])
        fh.close()
    return EXIT_OK if sol.converged else EXIT_UNCONVERGED


def _cmd_steady_state(args):
    cfg = load_config(args.config)
    model = cfg.build_model()
    result = optimal_steady_state(model, refine_rounds=args.refine_rounds)
    print(f"gain={result.gain:.10f} action={tuple(result.action)}")
    if args.out:
        fh, w = _open_csv(args.out, "steady-state")
        header = [f"a{d+1}" for d in range(model.actions.shape[1])] + ["gain"]
        header += [f"mu_k{k+1}_n{n+1}" for k in range(model.n_clusters)
                   for n in range(model.n_states)]
        w.writerow(header)
        for ai in range(model.n_actions):
            mu = stationary_distribution(model, ai)
            g = model.reward(ai, mu)
            w.writerow([f"{x:.12g}" for x in model.actions[ai]] + [f"{g:.12g}"]
                       + [f"{x:.12g}" for x in mu.ravel()])
        fh.close()
    return EXIT_OK


def _cmd_dual_bound(args):
    cfg = load_config(args.config)
    if cfg.model_spec["type"] != "pricing" and args.gammas:
        print("gamma scan requires a pricing model", file=sys.stderr)
        return EXIT_CONFIG
    powers = [int(p) for p in args.powers.split(",")]
    gammas = [float(g) for g in args.gammas.split(",")] if args.gammas else [None]
    rows = []
    for gam in gammas:
        model = cfg.build_model(gamma_override=gam)
        res = getattr(args, "grid_res", None) or cfg.grid_resolution
        if res is None:
            raise ConfigError("$.grid.resolution", "missing (set it or pass --grid-res)")
        grid = SimplexGrid(model.n_states, res)
        gbar = optimal_steady_state(model, refine_rounds=0).gain
        bounds = [dual_bound(model, power_phi(p), grid, max_iters=args.max_iters,
                             lower_target=gbar).bound for p in powers]
        sol = solve_rvi(model, grid, eps=cfg.eps, max_iter=cfg.max_iter)
        rows.append((gam if gam is not None else float("nan"), gbar, bounds, sol.gain))
        print(f"gamma={rows[-1][0]:g} gbar={gbar:.6f} "
              f"bounds={[f'{b:.6f}' for b in bounds]} solver_gain={sol.gain:.6f}")
    if args.out:
        fh, w = _open_csv(args.out, "dual-bound")
        w.writerow(["gamma", "gbar"] + [f"g_phi_p{p}" for p in powers] + ["solver_gain"])
        for gam, gbar, bounds, gain in rows:
            w.writerow([f"{gam:.12g}", f"{gbar:.12g}"]
                       + [f"{b:.12g}" for b in bounds] + [f"{gain:.12g}"])
        fh.close()
    return EXIT_OK


def _cmd_cycle_scan(args):
    gammas = np.round(np.arange(args.gamma_min, args.gamma_max + 1e-12,
                                args.gamma_step), 12)
    scan = scan_sSt(args.cost, args.reservation, args.beta, gammas,
                    step=args.step, tau_max=args.tau_max)
    kink = "none" if scan.kink is None else f"{scan.kink:g}"
    print(f"scanned {len(gammas)} switching costs, kink at gamma={kink}")
    if args.out:
        fh, w = _open_csv(args.out, "cycle-scan")
        w.writerow(["gamma", "best_gain", "amplitude", "period", "steady_gain"])
        for gam, spec, sg in zip(scan.gammas, scan.best, scan.steady_gains):
            w.writerow([f"{gam:.12g}", f"{spec.gain:.12g}",
                        f"{spec.amplitude:.12g}", spec.tau, f"{sg:.12g}"])
        fh.close()
    return EXIT_OK


def _cmd_verify_example(args):
    lams = [float(x) for x in args.lambdas.split(",")]
    from .model import counterexample_model

    model = counterexample_model(args.a0)
    region = verification.invariant_region(args.a0)
    gain = verification.kolmogorov_coefficients(args.a0)[0]
    pts = region.sample(args.samples, seed=args.seed)
    states = verification.counterexample_states(pts)
    rows = []
    for lam in lams:
        v = verification.analytic_eigenvector(args.a0, lam)
        res = verification.eigen_residual(model, states, v.as_state_function(), gain)
        rows.append((lam, res))
        print(f"lambda={lam:g} residual={res:.3e}")
    if args.out:
        fh, w = _open_csv(args.out, "verify-example")
        w.writerow(["lambda", "residual", "gain", "a0", "samples"])
        for lam, res in rows:
            w.writerow([f"{lam:.12g}", f"{res:.12g}", f"{gain:.12g}",
                        f"{args.a0:.12g}", args.samples])
        if args.dump_bias:
            w.writerow([])
            w.writerow(["mu1", "mu3"] + [f"v_lambda_{lam:g}" for lam in lams])
            grid = SimplexGrid(3, args.grid_res)
            sub = grid.points[:, [0, 2]]
            keep = region.contains(sub)
            vs = [verification.analytic_eigenvector(args.a0, lam) for lam in lams]
            for p in sub[keep]:
                w.writerow([f"{p[0]:.12g}", f"{p[1]:.12g}"]
                           + [f"{v(p[0], p[1]):.12g}" for v in vs])
        fh.close()
    return EXIT_OK


def _cmd_bench(args):
    cfg = load_config(args.config)
    model, grid = _grid_for(cfg, args)
    report = check_assumptions(model)
    nodes = grid.size ** model.n_clusters
    arcs = nodes * model.n_actions
    print(f"model={model.name} nodes={nodes} arcs={arcs} kappa_max={report.kappa_max:.4f}")

    t0 = time.perf_counter()
    tables = build_local_tables(model, grid)
    sol_pi = solve_howard(model, grid, max_iters=cfg.max_pi_iters, tables=tables)
    pi_time = time.perf_counter() - t0
    mem = memory_report(tables)

    rvi_cap = args.rvi_sweep_cap if args.rvi_sweep_cap else max(10 * sol_pi.sweeps, 100)
    t0 = time.perf_counter()
    op = GridBellman(model, grid)
    sol_rvi = solve_rvi(model, grid, eps=cfg.eps, max_iter=rvi_cap, operator=op)
    rvi_time = time.perf_counter() - t0

    rvi_sweeps = f"{sol_rvi.sweeps}" if sol_rvi.converged else f">{rvi_cap} (capped)"
    print(f"howard: gain={sol_pi.gain:.8f} sweep_equivalents={sol_pi.sweeps} "
          f"time={pi_time:.2f}s")
    print(f"rvi:    gain={sol_rvi.gain:.8f} sweeps={rvi_sweeps} time={rvi_time:.2f}s "
          f"converged={sol_rvi.converged}")
    print(f"memory: local transition tables {mem['local_transition_bytes']} B, "
          f"avoided global table {mem['global_table_bytes']} B, "
          f"ratio {mem['ratio']:.1f}x")
    if args.out:
        fh, w = _open_csv(args.out, "bench")
        w.writerow(["solver", "nodes", "arcs", "sweep_equivalents", "converged",
                    "gain", "wall_seconds", "transition_bytes", "state_bytes"])
        w.writerow(["howard", nodes, arcs, sol_pi.sweeps, int(sol_pi.converged),
                    f"{sol_pi.gain:.12g}", f"{pi_time:.3f}",
                    mem["local_transition_bytes"], mem["per_node_state_bytes"]])
        w.writerow(["rvi", nodes, arcs, sol_rvi.sweeps, int(sol_rvi.converged),
                    f"{sol_rvi.gain:.12g}", f"{rvi_time:.3f}",
                    mem["global_table_bytes"], mem["per_node_state_bytes"]])
        fh.close()
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="simplexmdp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get("SIMPLEXMDP_THREADS", "1")),
                    help="worker knob; numerical outputs do not depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, grid=True):
        p.add_argument("--config", required=True, help="JSON run configuration")
        if grid:
            p.add_argument("--grid-res", type=int, default=None)
        p.add_argument("--out", default=None, help="CSV output path")

    p = sub.add_parser("solve-rvi", help="relative value iteration")
    add_common(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--dump-bias", action="store_true")
    p.set_defaults(fn=_cmd_solve_rvi)

    p = sub.add_parser("solve-pi", help="Howard policy iteration")
    add_common(p)
    p.add_argument("--max-pi-iters", type=int, default=None)
    p.add_argument("--dump-policy", default=None, help="CSV path for the policy graph")
    p.set_defaults(fn=_cmd_solve_pi)

    p = sub.add_parser("steady-state", help="stationary gain per action")
    add_common(p, grid=False)
    p.add_argument("--refine-rounds", type=int, default=3)
    p.set_defaults(fn=_cmd_steady_state)

    p = sub.add_parser("dual-bound", help="dual bounds over a gamma scan")
    add_common(p)
    p.add_argument("--powers", default="1,2,3,4")
    p.add_argument("--gammas", default=None,
                   help="comma list of uniform switching costs (pricing models)")
    p.add_argument("--max-iters", type=int, default=2000)
    p.set_defaults(fn=_cmd_dual_bound)

    p = sub.add_parser("cycle-scan", help="(s,S,tau) cycle scan for the toy model")
    p.add_argument("--cost", type=float, default=2.0)
    p.add_argument("--reservation", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=3.0)
    p.add_argument("--gamma-step", type=float, default=0.05)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--tau-max", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_cycle_scan)

    p = sub.add_parser("verify-example", help="closed-form eigenpair residuals")
    p.add_argument("--a0", type=float, default=0.25)
    p.add_argument("--lambdas", default="0,0.5,1")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-res", type=int, default=50)
    p.add_argument("--dump-bias", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_verify_example)

    p = sub.add_parser("bench", help="solver comparison and memory accounting")
    add_common(p)
    p.add_argument("--rvi-sweep-cap", type=int, default=None)
    p.set_defaults(fn=_cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
