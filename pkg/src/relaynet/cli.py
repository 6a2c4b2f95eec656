"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 parse/validation error, 3 a
computation cap was exceeded. Every error prints one line on stderr that
starts with a code such as ``E_PARSE``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .coding import TypicalityConfig, rate_sweep, render_experiment, render_sweep, run_experiment
from .cuts import FORMULAS, DistSearchConfig, min_cut, optimize_distribution, render_bound_report
from .errors import RelayNetError
from .gaussian import GaussianParams, gap, render_report
from .info import InputDistribution
from .network import load_network, longest_path_and_layering, reachable_from
from .schedule import build_schedule, delay_report, render_delay, render_machine, render_table


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _rates(text):
    try:
        return [float(r) for r in text.split(",") if r.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("file", help="network description (v1 format)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $RELAYNET_THREADS or CPU count)")
    common.add_argument("--allow-unreachable", action="store_true",
                        help="accept networks where some destination is unreachable")

    parser = _Parser(prog="relaynet", description="Relay-network bounds, simulation and schedules.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="parse and validate a network")

    p = sub.add_parser("cutset", parents=[common], help="cut-set bound by cut enumeration")
    p.add_argument("--dist", default="uniform", help="uniform | file:<path>")
    p.add_argument("--optimize", action="store_true", help="coordinate ascent over product inputs")
    p.add_argument("--grid", type=int, default=16, help="simplex grid resolution 1/k")
    p.add_argument("--formula", choices=FORMULAS, default=None)

    def sim_args(p):
        p.add_argument("--n", type=int, required=True, help="block length")
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--typicality", choices=("strict", "iid"), default="iid")
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--dist", default="uniform", help="uniform | file:<path>")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo random coding")
    sim_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--cut-stats", action="store_true")

    p = sub.add_parser("sweep", parents=[common], help="error probability across rates")
    sim_args(p)
    p.add_argument("--rates", type=_rates, required=True)

    p = sub.add_parser("schedule", parents=[common], help="batch/pipelined block schedule")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--mode", choices=("batch", "pipelined"), required=True)
    p.add_argument("--analyze-window", action="store_true")
    p.add_argument("--machine", action="store_true")

    p = sub.add_parser("gap", parents=[common], help="DF rate, cut bound and high-SNR gap")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--noise", type=float, required=True)
    return parser


def _load_dist(spec, net):
    if spec == "uniform":
        return InputDistribution.uniform(net), "uniform"
    if spec.startswith("file:"):
        path = spec[5:]
        return InputDistribution.parse(Path(path).read_text(encoding="utf-8"), net), path
    raise UsageError(f"--dist must be 'uniform' or 'file:<path>', got {spec!r}")


def _validate_text(net) -> str:
    reach = reachable_from(net, net.source)
    if not any(t in reach for t in net.destinations):
        return f"{len(net.nodes)} nodes, {len(net.edges)} edges, acyclic, L=undefined\n"
    lay = longest_path_and_layering(net)
    lines = [f"{len(net.nodes)} nodes, {len(net.edges)} edges, acyclic, L={lay.L}"]
    lines.append(f"mode: {net.mode}")
    lines.append(f"layered: {'yes' if lay.is_layered else 'no'}")
    return "\n".join(lines) + "\n"


def run(args) -> str:
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")
    net = load_network(args.file, require_reachable=not args.allow_unreachable)
    workers = args.threads
    if args.command == "validate":
        return _validate_text(net)
    if args.command == "cutset":
        if args.optimize:
            if args.grid < 1:
                raise UsageError("--grid must be positive")
            result = optimize_distribution(net, DistSearchConfig(grid=args.grid), args.formula,
                                           workers=workers)
            label = f"optimized grid=1/{args.grid}"
        else:
            dist, label = _load_dist(args.dist, net)
            result = min_cut(net, dist, args.formula, workers=workers)
        return render_bound_report(net, result, label)
    if args.command in ("simulate", "sweep"):
        dist, _ = _load_dist(args.dist, net)
        try:
            cfg = TypicalityConfig(delta=args.delta, mode=args.typicality)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.n < 1 or args.trials < 0:
            raise UsageError("--n must be positive and --trials nonnegative")
        if args.command == "simulate":
            result = run_experiment(net, dist, args.n, args.rate, args.trials, args.seed, cfg,
                                    cut_stats=args.cut_stats, workers=workers)
            return render_experiment(result, net, dist)
        results = rate_sweep(net, dist, args.n, args.rates, args.trials, args.seed, cfg,
                             workers=workers)
        return render_sweep(results)
    if args.command == "schedule":
        if args.blocks < 1:
            raise UsageError("--blocks must be at least 1")
        sched = build_schedule(net, args.blocks, args.mode)
        out = render_machine(sched) if args.machine else render_table(sched)
        if args.analyze_window:
            for t in net.destinations:
                rep = delay_report(sched, net, t)
                out += f"\ndestination: {t}\n" + render_delay(rep, args.mode)
        return out
    if args.command == "gap":
        try:
            params = GaussianParams(args.power, args.noise)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return render_report(gap(net, params), params)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = run(args)
    except UsageError as exc:
        print(f"E_USAGE: {exc}", file=sys.stderr)
        return 1
    except RelayNetError as exc:
        print(str(exc).splitlines()[0], file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
