"""Command-line entry points.

Subcommands: simulate, sweep, analyze, mpc-demo. Exit codes: 0 success,
1 validation problem, 2 I/O failure, 3 numeric or protocol failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConvergenceError, ProtocolError, ValidationError
from . import harness


def _add_common_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="edge-list file (SNAP format)")
    p.add_argument("--synthetic", help="synthetic spec, e.g. small-world:n=2000,k=10,beta=0.1")
    p.add_argument("--rounds", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seed-fraction", type=float, dest="seed_fraction")
    p.add_argument("--seed-count", type=int, dest="seed_count")
    p.add_argument("--metric-mode", choices=("distribution", "bernoulli"), dest="metric_mode")
    p.add_argument("--draw-susceptible-only", action="store_true", default=None,
                   dest="draw_susceptible_only")
    p.add_argument("--giant-component", action="store_true", default=None, dest="giant_component")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", help="SVG output path (one file per strategy)")


def _overrides_from_args(args: argparse.Namespace) -> dict:
    mapping = {
        "graph": "graph", "synthetic": "synthetic", "strategy": "strategy",
        "strategies": "strategies", "visibility": "visibility", "budget": "budget",
        "rounds": "rounds", "trials": "trials", "seed": "seed",
        "seed_fraction": "seed_fraction", "seed_count": "seed_count",
        "metric_mode": "metric_mode", "draw_susceptible_only": "draw_susceptible_only",
        "giant_component": "giant_component", "workers": "workers",
        "out": "out", "plot": "plot",
    }
    out = {}
    for attr, key in mapping.items():
        val = getattr(args, attr, None)
        if val is None:
            continue
        out[key] = str(val) if not isinstance(val, bool) else ("true" if val else "false")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epiwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one strategy over V/Q settings")
    sim.add_argument("--strategy", required=True)
    sim.add_argument("--visibility", required=True, help="value or comma list")
    sim.add_argument("--budget", required=True, help="value or comma list")
    _add_common_sim_flags(sim)

    swp = sub.add_parser("sweep", help="run a config-driven strategy/V/Q sweep")
    swp.add_argument("--config", required=True)
    swp.add_argument("--strategies", help="comma list")
    swp.add_argument("--visibility", help="comma list")
    swp.add_argument("--budget", help="comma list")
    _add_common_sim_flags(swp)

    ana = sub.add_parser("analyze", help="structural report for a graph")
    ana.add_argument("--graph")
    ana.add_argument("--synthetic")
    ana.add_argument("--seed", type=int, default=0)

    mpc = sub.add_parser("mpc-demo", help="multi-agency private walk demo")
    mpc.add_argument("--parties", type=int, required=True)
    mpc.add_argument("--graph")
    mpc.add_argument("--synthetic")
    mpc.add_argument("--steps", type=int, default=10)
    mpc.add_argument("--key-bits", type=int, default=1024, dest="key_bits")
    mpc.add_argument("--fixed-bits", type=int, default=16, dest="fixed_bits")
    mpc.add_argument("--seed", type=int, default=0)
    mpc.add_argument("--transcript", help="write the message log (sizes only) to this file")
    return parser


def _cmd_simulate(args) -> int:
    raw = _overrides_from_args(args)
    cfg = harness.config_from_mapping(raw)
    cfg.validate()
    result = harness.run_sweep(cfg)
    if cfg.out:
        harness.emit_csv(result, cfg.out)
        print(f"wrote {cfg.out}")
    else:
        harness.emit_csv(result, sys.stdout)
    if cfg.plot:
        for path in harness.emit_plot(result, cfg.plot):
            print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    raw = harness.parse_config_file(args.config)
    raw.update(_overrides_from_args(args))
    cfg = harness.config_from_mapping(raw)
    cfg.validate()
    result = harness.run_sweep(cfg)
    if cfg.out:
        harness.emit_csv(result, cfg.out)
        print(f"wrote {cfg.out}")
    else:
        harness.emit_csv(result, sys.stdout)
    if cfg.plot:
        for path in harness.emit_plot(result, cfg.plot):
            print(f"wrote {path}")
    return 0


def _cmd_analyze(args) -> int:
    report = harness.analyze_graph(graph_path=args.graph, synthetic=args.synthetic, seed=args.seed)
    print(f"nodes:                   {report['nodes']}")
    print(f"edges:                   {report['edges']}")
    print(f"mean degree:             {report['mean_degree']:.4f}")
    print(f"largest component share: {report['largest_component_share']:.4f}")
    print(f"network max potential:   {report['network_max_potential']:.6f}")
    print(f"eigenvalue gap (lazy):   {report['eigenvalue_gap']:.8f} "
          f"(tolerance {report['eigenvalue_gap_tolerance']:.1e})")
    return 0


def _cmd_mpc_demo(args) -> int:
    report = harness.mpc_demo(
        parties=args.parties, graph_path=args.graph, synthetic=args.synthetic,
        steps=args.steps, key_bits=args.key_bits, fixed_bits=args.fixed_bits, seed=args.seed,
    )
    print(f"parties:            {report['parties']}")
    print(f"joint graph:        {report['nodes']} nodes, {report['edges']} edges")
    print(f"walk steps:         {report['steps']} (c={report['fixed_bits']}, key {report['key_bits']} bits)")
    print(f"bit-exact vs plain: {report['bit_exact']}")
    print(f"max float deviation: {report['max_float_deviation']:.3e} "
          f"(declared bound {report['declared_error_bound']:.3e})")
    print(f"transcript:         {report['transcript_messages']} messages, "
          f"{report['transcript_bytes']} bytes")
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            report["transcript"].dump(fh)
        print(f"wrote {args.transcript}")
    if not report["bit_exact"]:
        raise ProtocolError("encrypted walk disagreed with the plaintext fixed-point twin")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "mpc-demo":
            return _cmd_mpc_demo(args)
        parser.error(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, ProtocolError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
