"""Batch command line: synth, solve, evaluate, sweep.

Exit codes: 0 success, 1 usage or I/O error, 2 infeasible, 3 numerical failure.
Settings resolve as command-line flags > ``--config`` file > built-in defaults.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cc_model import CCConfig, ComplianceModel, build_cc_program, load_compliance, solve_chance_constrained
from .conic import InfeasibleError, SolverError, dump_program
from .det_model import build_costs, build_deterministic_program, load_policy_csv, solve_deterministic, write_policy_csv
from .leadtime import LeadTimeError, SkewNormalParams, discretize_leadtime, load_beta, mean_leadtime_slots
from .queueing import fcfs_evaluate_batch, missed_flight_check, write_trace_csv
from .sensitivity import DEFAULT_GRIDS, PARAMETERS, SweepSpec, run_sweep, write_sweep_csv
from .simulate import SimConfig, counts_matrix, evaluate_policy, generate_arrivals, generate_baseline, write_counts_csv, write_stream_csv
from .timegrid import (DEFAULT_CAPACITY, ScheduleError, TimeGrid, load_capacity, load_schedule, save_capacity,
                       save_schedule, synth_schedule)

log = logging.getLogger("secslot")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


GLOBAL_DEFAULTS = {"seed": 0, "jobs": 1, "out": "out", "config": None, "verbose": False}


def _common(top: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand.

    Subcommand copies suppress their defaults so they never overwrite a value
    given before the subcommand.
    """
    def default(key):
        return GLOBAL_DEFAULTS[key] if top else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=default("seed"))
    g.add_argument("--jobs", type=int, default=default("jobs"))
    g.add_argument("--out", default=default("out"))
    g.add_argument("--config", default=default("config"), help="flat key = value file")
    g.add_argument("-v", "--verbose", action="store_true", default=default("verbose"))
    return p


def _instance_args(p: argparse.ArgumentParser, schedule_required=True):
    p.add_argument("--schedule", required=schedule_required, help="flight_id,departure,seats CSV")
    p.add_argument("--capacity", default=str(DEFAULT_CAPACITY),
                   help="per-slot capacity: a number, or a slot,capacity CSV")
    p.add_argument("--slot-minutes", type=int, default=15)
    p.add_argument("--num-slots", type=int, default=112)
    p.add_argument("--origin", type=int, default=0, help="minutes after midnight of slot 0")
    p.add_argument("--window", type=int, default=16, help="recommendation window in slots")
    p.add_argument("--lead-location", type=float, default=64.0)
    p.add_argument("--lead-scale", type=float, default=30.0)
    p.add_argument("--lead-shape", type=float, default=3.0)
    p.add_argument("--beta", default=None, help="k,mass override CSV")
    p.add_argument("--mu", type=float, default=0.7)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--compliance", default=None, help="flight_id,slot,mu,sigma CSV")


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = _Parser(prog="secslot", description=__doc__.splitlines()[0], parents=[_common(top=True)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic schedule")
    p.add_argument("--n-flights", type=int, default=260)
    p.add_argument("--total-seats", type=int, default=49_034)
    p.add_argument("--capacity", default=str(DEFAULT_CAPACITY))
    p.add_argument("--slot-minutes", type=int, default=15)
    p.add_argument("--num-slots", type=int, default=112)
    p.add_argument("--origin", type=int, default=0)
    p.add_argument("--window", type=int, default=16)

    p = sub.add_parser("solve", parents=[common], help="compute a recommendation policy")
    _instance_args(p)
    p.add_argument("--mode", choices=("det", "cc"), required=True)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--dump-program", action="store_true", help="also write program.txt")

    p = sub.add_parser("evaluate", parents=[common], help="simulate policies against no control")
    _instance_args(p)
    p.add_argument("--policy", action="append", default=[], metavar="LABEL=PATH",
                   help="policy CSV to evaluate (repeatable)")
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--no-clamp", action="store_true", help="keep sampled compliance unclamped")
    p.add_argument("--algorithm1-literal", action="store_true",
                   help="weight non-compliers by alpha instead of 1 - alpha (non-normalizing, rescaled)")
    p.add_argument("--export-arrivals", action="store_true", help="write per-passenger arrivals")

    p = sub.add_parser("sweep", parents=[common], help="sensitivity sweep over gamma, mu or sigma")
    _instance_args(p)
    p.add_argument("--param", choices=PARAMETERS, required=True)
    p.add_argument("--values", default=None, help="comma-separated values (default: built-in grid)")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--replications", type=int, default=20)
    return parser


_BOOL_KEYS = {"verbose", "no_clamp", "algorithm1_literal", "export_arrivals", "dump_program"}


def read_config(path) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key in _BOOL_KEYS:
                cfg[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                cfg[key] = value
    return cfg


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            cfg = read_config(known.config)
        except OSError as exc:
            parser.exit(EXIT_USAGE, f"secslot: cannot read config: {exc}\n")
        except UsageError as exc:
            parser.exit(EXIT_USAGE, f"secslot: {exc}\n")
        cfg.pop("config", None)
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for sp in action.choices.values():
                given = {}
                for a in sp._actions:  # noqa: SLF001
                    if a.dest in cfg and a.dest not in GLOBAL_DEFAULTS:
                        given[a.dest] = cfg[a.dest]
                        a.required = False
                sp.set_defaults(**given)
        top = {k: v for k, v in cfg.items() if k in GLOBAL_DEFAULTS}
        for key in ("seed", "jobs"):
            if key in top:
                try:
                    top[key] = int(top[key])
                except ValueError:
                    parser.exit(EXIT_USAGE, f"secslot: config {key} must be an integer\n")
        parser.set_defaults(**top)
    return parser.parse_args(argv)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args, out: Path, inputs: list, outputs: list) -> None:
    snapshot = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "verbose")}
    manifest = {
        "command": args.command,
        "config": snapshot,
        "seed": args.seed,
        "tool_version": __version__,
        "inputs": {str(p): _digest(p) for p in inputs if p},
        "outputs": {Path(p).name: _digest(p) for p in outputs},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _grid(args) -> TimeGrid:
    return TimeGrid(args.slot_minutes, args.num_slots, args.origin)


def _capacity(args, grid):
    try:
        return float(args.capacity)
    except ValueError:
        return load_capacity(args.capacity, grid)


def _instance(args):
    grid = _grid(args)
    schedule = load_schedule(args.schedule, grid, _capacity(args, grid), args.window)
    params = SkewNormalParams(args.lead_location, args.lead_scale, args.lead_shape)
    beta = load_beta(args.beta) if args.beta else discretize_leadtime(params, grid, args.window)
    if args.compliance:
        compliance = load_compliance(args.compliance, schedule, args.mu, args.sigma)
    else:
        compliance = ComplianceModel.uniform(schedule, args.mu, args.sigma)
    L = mean_leadtime_slots(params, grid)
    return schedule, beta, compliance, L


def _inputs(args):
    paths = [args.schedule, args.beta, args.compliance]
    try:
        float(args.capacity)
    except ValueError:
        paths.append(args.capacity)
    return [p for p in paths if p]


def cmd_synth(args) -> int:
    grid = _grid(args)
    schedule = synth_schedule(args.seed, args.n_flights, args.total_seats, grid=grid,
                              capacity=_capacity(args, grid), window_len=args.window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sched_path, cap_path = out / "schedule.csv", out / "capacity.csv"
    save_schedule(schedule, sched_path)
    save_capacity(schedule, cap_path)
    _write_manifest(args, out, [], [sched_path, cap_path])
    print(f"wrote {len(schedule)} flights, {schedule.total_seats} seats to {sched_path}")
    return EXIT_OK


def cmd_solve(args) -> int:
    schedule, beta, compliance, L = _instance(args)
    costs = build_costs(schedule, L)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if args.dump_program:
        if args.mode == "det":
            prog, _ = build_deterministic_program(schedule, costs)
        else:
            prog, _ = build_cc_program(schedule, costs, beta, compliance, CCConfig(args.gamma))
        dump_program(prog, out / "program.txt")
        outputs.append(out / "program.txt")
    if args.mode == "det":
        policy = solve_deterministic(schedule, costs)
    else:
        policy = solve_chance_constrained(schedule, costs, beta, compliance, CCConfig(args.gamma))
    policy_path, stats_path = out / "policy.csv", out / "stats.json"
    write_policy_csv(policy, schedule, policy_path)
    st = policy.solver_stats
    stats = {"mode": args.mode, "status": "optimal", "objective": policy.objective,
             "backend": st.backend, "iterations": st.iterations,
             "max_linear_violation": st.max_linear_violation, "max_cone_violation": st.max_cone_violation,
             "flights": len(schedule), "seats": schedule.total_seats}
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs += [policy_path, stats_path]
    _write_manifest(args, out, _inputs(args), outputs)
    print(f"{args.mode}: objective {policy.objective:.6g} -> {policy_path}")
    return EXIT_OK


def _policy_specs(items):
    specs = []
    for item in items:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        specs.append((label, path))
    return specs


def cmd_evaluate(args) -> int:
    if not args.policy:
        raise UsageError("evaluate needs at least one --policy")
    schedule, beta, compliance, _ = _instance(args)
    sim = SimConfig(args.seed, args.replications, not args.no_clamp, args.algorithm1_literal,
                    args.export_arrivals, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    base = fcfs_evaluate_batch(counts_matrix(generate_baseline(schedule, beta, sim)),
                               schedule.capacity, schedule)
    write_trace_csv(base[0], out / "trace_baseline.csv")
    outputs.append(out / "trace_baseline.csv")
    rows = [("baseline", 0.0, 0.0, float(np.mean([b.area() for b in base])),
             sum(missed_flight_check(b).missed for b in base))]
    policy_paths = []
    for label, path in _policy_specs(args.policy):
        policy = load_policy_csv(path, schedule, label)
        policy_paths.append(path)
        ev = evaluate_policy(policy, schedule, beta, compliance, sim, base)
        trace_path = out / f"trace_{label}.csv"
        write_trace_csv(ev.traces[0], trace_path)
        outputs.append(trace_path)
        rows.append((label, ev.tts_mean, ev.tts_stderr, float(np.mean([t.area() for t in ev.traces])),
                     sum(ev.missed_policy)))
        if args.export_arrivals:
            streams = generate_arrivals(policy, schedule, beta, compliance, sim)
            write_stream_csv(streams, schedule, out / f"arrivals_{label}.csv")
            write_counts_csv(streams, out / f"counts_{label}.csv")
            outputs += [out / f"arrivals_{label}.csv", out / f"counts_{label}.csv"]
        print(f"{label}: TTS {ev.tts_mean:.1f} +/- {ev.tts_stderr:.1f} pax-h; "
              f"missed-flight replications {sum(ev.missed_policy)}/{len(ev.traces)}")
    summary = out / "summary.csv"
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("label,replications,tts_mean,tts_stderr,queue_area_mean,missed_replications\n")
        for label, m, se, area, missed in rows:
            fh.write(f"{label},{args.replications},{m!r},{se!r},{area!r},{missed}\n")
    outputs.append(summary)
    _write_manifest(args, out, _inputs(args) + policy_paths, outputs)
    print(f"baseline: missed-flight replications {rows[0][4]}/{len(base)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.values is None:
        values = DEFAULT_GRIDS[args.param]
    else:
        try:
            values = tuple(float(v) for v in args.values.split(",") if v.strip())
        except ValueError as exc:
            raise UsageError(f"bad --values: {exc}") from exc
    if not values:
        raise UsageError("--values is empty")
    schedule, beta, compliance, L = _instance(args)
    spec = SweepSpec(args.param, values, schedule, beta, build_costs(schedule, L), compliance,
                     CCConfig(args.gamma), L)
    records = run_sweep(spec, SimConfig(args.seed, args.replications), args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    write_sweep_csv(records, path)
    _write_manifest(args, out, _inputs(args), [path])
    for r in records:
        print(f"{r.param}={r.value:g}: {r.status} objective={r.objective:.6g} early={r.early_mass:.1f} "
              f"tts={r.tts_mean:.1f}")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "solve": cmd_solve, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"secslot: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"secslot: solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ScheduleError, LeadTimeError, ValueError, OSError) as exc:
        print(f"secslot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
