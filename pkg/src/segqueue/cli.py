"""Command-line interface: ``segqueue {analyze,sweep,simulate,optimize}``.

Exit codes: 0 success, 2 configuration error, 3 unstable load (or no
stable payload size), 4 series truncation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace

from .config import Config, load_config
from .errors import ConfigError, NoStablePointError, TruncationError, UnstableError
from .queueing import Scenario, batch_workload_wait, response_time, service_cv
from .simulator import run as run_simulation
from .sweep import SweepSpec, minimize_payload, sweep_lambdas

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_TRUNCATION = 0, 2, 3, 4

ANALYZE_COLUMNS = ["lambda", "ell_d", "pi_E", "ell_p", "sigma_p2", "EX", "EX2", "ES", "ES2", "a", "EW1", "EW2", "EW", "ER"]
SWEEP_COLUMNS = ["lambda", "ell_d", "pi_E", "EX", "EX2", "ES", "ES2", "a", "EW1", "EW2", "EW", "ER", "status"]
SIMULATE_COLUMNS = ["quantity", "analytic", "sim_mean", "half_width", "inside_ci"]


def _num(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _emit(rows, header, path, stream):
    if path:
        with open(path, "w", newline="") as fh:
            _write_csv(fh, header, rows)
    else:
        _write_csv(stream, header, rows)


def _write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _single(cfg: Config, args, what):
    if cfg.ell_d is None:
        raise ConfigError(f"{what} needs [payload] ell_d")
    lams = _lambdas(cfg, args)
    if len(lams) != 1:
        raise ConfigError(f"{what} needs exactly one lambda, got {len(lams)}")
    return Scenario(cfg.distribution, cfg.ell_d, cfg.link, lams[0])


def _lambdas(cfg, args):
    return tuple(args.lam) if args.lam else cfg.lambdas


def _spec(cfg, lam):
    if cfg.grid is None:
        raise ConfigError("this command needs a payload grid ([payload] min/max)")
    return SweepSpec(cfg.distribution, cfg.link, lam, cfg.grid, cfg.eps_rel, cfg.n_max)


def cmd_analyze(cfg: Config, args, out) -> int:
    sc = _single(cfg, args, "analyze")
    m = response_time(sc, cfg.eps_rel, cfg.n_max)
    st = m.stats
    lines = [
        ("payload size ell_d", sc.ell_d, "B"),
        ("arrival rate lambda", sc.lam, "msg/s"),
        ("link capacity", sc.link.capacity, "B/s"),
        ("header", sc.link.header, "B"),
        ("edge-packet probability pi_E", st.pi_E, ""),
        ("mean packet payload ell_p", st.ell_p, "B"),
        ("packet payload variance", st.sigma_p2, "B^2"),
        ("mean batch size E[X]", st.EX, "packets"),
        ("batch second moment E[X^2]", st.EX2, "packets^2"),
        ("mean service E[S]", m.ES, "s"),
        ("service second moment E[S^2]", m.ES2, "s^2"),
        ("service CV", service_cv(m.ES, m.ES2), ""),
        ("offered load a", m.a, ""),
        ("mean batch wait E[W1]", m.EW1, "s"),
        ("mean intra-batch wait E[W2]", m.EW2, "s"),
        ("mean wait E[W]", m.EW, "s"),
        ("mean response E[R]", m.ER, "s"),
        ("series terms", st.series.n_used, ""),
    ]
    for label, value, unit in lines:
        print(f"{label:<32} {value:>.10g} {unit}".rstrip(), file=out)
    if m.high_load:
        print(f"warning: offered load {m.a:.4g} is close to 1", file=out)
    if args.csv:
        row = [sc.lam, sc.ell_d, st.pi_E, st.ell_p, st.sigma_p2, st.EX, st.EX2, m.ES, m.ES2, m.a, m.EW1, m.EW2, m.EW, m.ER]
        _emit([[_num(v) for v in row]], ANALYZE_COLUMNS, args.csv, out)
    return EXIT_OK


def cmd_sweep(cfg: Config, args, out) -> int:
    lams = _lambdas(cfg, args)
    rows = sweep_lambdas(_spec(cfg, lams[0]), lams)
    table = []
    for r in rows:
        st, m = r.stats, r.metrics
        seg = [st.pi_E, st.EX, st.EX2] if st else [None] * 3
        q = [m.ES, m.ES2, m.a, m.EW1, m.EW2, m.EW, m.ER] if m else [None] * 7
        table.append([_num(r.lam), _num(r.ell_d), *map(_num, seg), *map(_num, q), r.status])
    _emit(table, SWEEP_COLUMNS, args.csv, out)
    if args.csv:
        print(f"wrote {len(table)} rows to {args.csv}", file=out)
    return EXIT_OK


def cmd_simulate(cfg: Config, args, out) -> int:
    sc = _single(cfg, args, "simulate")
    if cfg.sim is None:
        raise ConfigError("simulate needs a [sim] section")
    sim_cfg = cfg.sim if args.seed is None else replace(cfg.sim, base_seed=args.seed)
    m = response_time(sc, cfg.eps_rel, cfg.n_max)
    res = run_simulation(sc, sim_cfg, cfg.eps_rel, cfg.n_max)
    pairs = [
        ("EW1", m.EW1, res.mean_W1_hat),
        ("EW1_batch_workload", batch_workload_wait(sc, m.stats), res.mean_W1_hat),
        ("EW2", m.EW2, res.mean_W2_hat),
        ("ER", m.ER, res.mean_R_paper),
        ("R_packet", None, res.mean_R_packet),
        ("a", m.a, res.utilization_hat),
    ]
    level = sim_cfg.confidence_level
    print(f"{res.messages_simulated} messages in {sim_cfg.replications} replications, "
          f"{100 * level:g}% confidence intervals", file=out)
    print(f"{'quantity':<20} {'analytic':>16} {'simulated':>16} {'half-width':>12}", file=out)
    table = []
    for name, analytic, est in pairs:
        inside = "" if analytic is None else est.contains(analytic)
        flag = "" if analytic is None or inside else "  OUTSIDE CI"
        shown = "-" if analytic is None else f"{analytic:.10g}"
        print(f"{name:<20} {shown:>16} {est.mean:>16.10g} {est.half_width:>12.4g}{flag}", file=out)
        table.append([name, _num(analytic), _num(est.mean), _num(est.half_width), str(inside).lower()])
    if args.csv:
        _emit(table, SIMULATE_COLUMNS, args.csv, out)
    return EXIT_OK


def cmd_optimize(cfg: Config, args, out) -> int:
    lams = _lambdas(cfg, args)
    for lam in lams:
        x, er, trace = minimize_payload(_spec(cfg, lam), args.refine)
        print(f"lambda = {lam:.10g} msg/s", file=out)
        for rnd, xr, err in trace:
            print(f"  round {rnd}: ell_d = {xr:.10g} B, E[R] = {err:.10g} s", file=out)
        print(f"  optimum: ell_d* = {x:.10g} B, E[R]* = {er:.10g} s", file=out)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "simulate": cmd_simulate, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="scenario configuration file")
    common.add_argument("--csv", metavar="PATH", help="write CSV output to PATH")
    common.add_argument("--lambda", dest="lam", type=float, action="append", metavar="X",
                        help="message arrival rate (1/s); repeatable, overrides the config")
    common.add_argument("--seed", type=int, help="override [sim] base_seed")
    common.add_argument("--refine", type=int, default=3, metavar="K", help="refinement rounds for optimize")
    parser = argparse.ArgumentParser(prog="segqueue", description="Response time of segmented messages on one link.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed-form metrics for one payload size")
    sub.add_parser("sweep", parents=[common], help="closed-form metrics over the payload grid")
    sub.add_parser("simulate", parents=[common], help="simulate and compare with the closed form")
    sub.add_parser("optimize", parents=[common], help="payload size minimizing mean response time")
    return parser


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnstableError, NoStablePointError) as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except TruncationError as exc:
        print(f"truncation failure: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION


if __name__ == "__main__":
    sys.exit(main())
