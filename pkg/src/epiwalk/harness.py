"""Experiment orchestration: V x Q x strategy sweeps, aggregation, output.

Every output byte is determined by (config, master seed): per-trial
generators are derived from the master seed and the cell coordinates, never
from worker layout, so sweeps shard and parallelize without changing
results.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import interventions, metrics, simulate
from .errors import ProtocolError, ValidationError
from .graph import Graph, generate_synthetic, load_edge_list, largest_connected_component, sample_visibility
from .mpc import (
    FixedPointParams,
    Transcript,
    AgencyShare,
    assign_labels,
    dedup_edges,
    distributed_walk,
    joint_degrees,
    keygen_joint,
    pairwise_intersections,
    plaintext_fixed_walk,
)

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "SweepResult",
    "parse_config_file",
    "parse_synthetic_spec",
    "load_graph",
    "run_sweep",
    "emit_csv",
    "read_csv",
    "emit_plot",
    "analyze_graph",
    "mpc_demo",
]

DEFAULT_VISIBILITY = (0.10, 0.35, 0.60, 0.85)
DEFAULT_BUDGET = (0.05, 0.15, 0.25, 0.35, 0.45)

CSV_HEADER = (
    "strategy,visibility,budget,round,mean_potential,min_potential,"
    "max_potential,mean_infected_fraction,trials,seed"
)


@dataclass
class ExperimentConfig:
    graph_path: str | None = None
    synthetic: str | None = None
    strategies: tuple = ("null",)
    visibility: tuple = DEFAULT_VISIBILITY
    budget: tuple = DEFAULT_BUDGET
    rounds: int = 20
    trials: int = 1000
    seed: int = 0
    metric_mode: str = "distribution"
    seeds: float | int = 0.01
    draw_susceptible_only: bool = False
    giant_component: bool = False
    workers: int = 1
    out: str | None = None
    plot: str | None = None

    def validate(self) -> None:
        problems = []
        if self.graph_path is None and self.synthetic is None:
            problems.append("no graph source: set graph or synthetic")
        if self.graph_path is not None and self.synthetic is not None:
            problems.append("graph and synthetic are mutually exclusive")
        for s in self.strategies:
            if s not in simulate.STRATEGIES:
                problems.append(f"unknown strategy {s!r}")
        for v in self.visibility:
            if not 0.0 <= v <= 1.0:
                problems.append(f"visibility {v} outside [0,1]")
        for q in self.budget:
            if not 0.0 <= q <= 1.0:
                problems.append(f"budget {q} outside [0,1]")
        if self.rounds < 1:
            problems.append(f"rounds must be >= 1, got {self.rounds}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if self.metric_mode not in ("distribution", "bernoulli"):
            problems.append(f"metric_mode must be distribution|bernoulli, got {self.metric_mode!r}")
        if isinstance(self.seeds, float) and not 0.0 < self.seeds <= 1.0:
            problems.append(f"seed fraction {self.seeds} outside (0,1]")
        if isinstance(self.seeds, int) and self.seeds < 1:
            problems.append(f"seed count {self.seeds} must be >= 1")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if problems:
            raise ValidationError("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    visibility: float
    budget: float
    round: int
    mean_potential: float
    min_potential: float
    max_potential: float
    mean_infected_fraction: float
    trials: int
    seed: int


@dataclass(eq=False)
class SweepResult:
    rows: list
    master_seed: int

    def sorted_rows(self) -> list:
        return sorted(
            self.rows,
            key=lambda r: (r.strategy, r.visibility, r.budget, r.round),
        )


def parse_synthetic_spec(spec: str) -> tuple[str, dict]:
    """Parse "model:key=val,key=val" synthetic-graph specs."""
    model, _, rest = spec.partition(":")
    model = model.strip()
    params = {}
    if rest.strip():
        for item in rest.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValidationError(f"bad synthetic parameter {item!r} in {spec!r}")
            key = key.strip()
            try:
                params[key] = int(val) if key in ("n", "k", "m") else float(val)
            except ValueError:
                raise ValidationError(f"non-numeric synthetic parameter {item!r}") from None
    return model, params


def load_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph_path is not None:
        g = load_edge_list(cfg.graph_path)
        if cfg.giant_component:
            g = largest_connected_component(g)
        return g
    model, params = parse_synthetic_spec(cfg.synthetic)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x67AF]))
    return generate_synthetic(model, params, rng)


def parse_config_file(path: str) -> dict:
    """Flat key=value config; '#' comments. Returns raw string values."""
    raw = {}
    problems = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                problems.append(f"line {lineno}: expected key=value, got {line!r}")
                continue
            raw[key.strip()] = val.strip()
    if problems:
        raise ValidationError("bad config file:\n  " + "\n  ".join(problems))
    return raw


def config_from_mapping(raw: dict) -> ExperimentConfig:
    """Build a config from string key/values (file contents or overrides)."""
    cfg = ExperimentConfig()
    problems = []
    converters = {
        "graph": ("graph_path", str),
        "synthetic": ("synthetic", str),
        "strategies": ("strategies", lambda s: tuple(x.strip() for x in s.split(",") if x.strip())),
        "strategy": ("strategies", lambda s: (s.strip(),)),
        "visibility": ("visibility", lambda s: tuple(float(x) for x in s.split(","))),
        "budget": ("budget", lambda s: tuple(float(x) for x in s.split(","))),
        "rounds": ("rounds", int),
        "trials": ("trials", int),
        "seed": ("seed", int),
        "metric_mode": ("metric_mode", str),
        "seed_fraction": ("seeds", float),
        "seed_count": ("seeds", int),
        "draw_susceptible_only": ("draw_susceptible_only", lambda s: s.lower() in ("1", "true", "yes")),
        "giant_component": ("giant_component", lambda s: s.lower() in ("1", "true", "yes")),
        "workers": ("workers", int),
        "out": ("out", str),
        "plot": ("plot", str),
    }
    updates = {}
    for key, val in raw.items():
        if key not in converters:
            problems.append(f"unknown config key {key!r}")
            continue
        attr, conv = converters[key]
        try:
            updates[attr] = conv(val)
        except (TypeError, ValueError):
            problems.append(f"bad value for {key}: {val!r}")
    if problems:
        raise ValidationError("invalid configuration:\n  " + "\n  ".join(problems))
    return replace(cfg, **updates)


def _strategy_key(strategy: str) -> int:
    return int.from_bytes(strategy.encode("utf-8")[:8].ljust(8, b"\0"), "big") & 0x7FFFFFFF


def _trial_rng(master_seed: int, strategy: str, v: float, q: float, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        [master_seed, _strategy_key(strategy), round(v * 1_000_000), round(q * 1_000_000), trial]
    )
    return np.random.default_rng(ss)


def _run_chunk(args):
    """One contiguous block of trials for one sweep cell (worker entry)."""
    (g, strategy, v, q, rounds, lo, hi, master_seed, seeds, draw_flag, need_hits) = args
    n = g.node_count
    counts = np.zeros((hi - lo, rounds + 1), dtype=np.int64)
    hits = np.zeros((rounds + 1, n), dtype=np.int64) if need_hits else None
    r0_sum = 0
    r0_cases = 0
    for trial in range(lo, hi):
        rng = _trial_rng(master_seed, strategy, v, q, trial)
        view = sample_visibility(g, v, rng)
        tr = simulate.run_trial(
            g, strategy, view, q, rounds, rng,
            seeds=seeds, draw_susceptible_only=draw_flag, collect_events=False,
        )
        counts[trial - lo] = tr.infected_count_by_round
        if need_hits:
            rounds_vec = tr.infection_round
            infected = rounds_vec >= 0
            hits[rounds_vec[infected], np.flatnonzero(infected)] += 1
        r0_sum += int(tr.index_case_secondary_counts.sum())
        r0_cases += int(tr.index_cases.size)
    if need_hits:
        hits = np.cumsum(hits, axis=0)
    return counts, hits, r0_sum, r0_cases


def run_sweep(cfg: ExperimentConfig, graph: Graph | None = None) -> SweepResult:
    """Run every (strategy, V, Q) cell and aggregate per-round potential."""
    cfg.validate()
    g = graph if graph is not None else load_graph(cfg)
    n = g.node_count
    need_hits = cfg.metric_mode == "bernoulli"
    rows: list[SweepRow] = []

    cells = [(s, v, q) for s in cfg.strategies for v in cfg.visibility for q in cfg.budget]
    for strategy, v, q in cells:
        workers = min(cfg.workers, cfg.trials)
        bounds = np.linspace(0, cfg.trials, workers + 1).astype(int)
        tasks = [
            (g, strategy, v, q, cfg.rounds, int(lo), int(hi), cfg.seed, cfg.seeds,
             cfg.draw_susceptible_only, need_hits)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_run_chunk, tasks))
        else:
            parts = [_run_chunk(t) for t in tasks]
        counts = np.vstack([p[0] for p in parts])
        hits = sum((p[1] for p in parts), start=np.zeros((cfg.rounds + 1, n), dtype=np.int64)) if need_hits else None
        series = metrics.series_from_counts(counts, n, mode=cfg.metric_mode, node_hits_by_round=hits)
        for rnd in range(1, cfg.rounds + 1):
            rows.append(
                SweepRow(
                    strategy=strategy,
                    visibility=v,
                    budget=q,
                    round=rnd,
                    mean_potential=float(series.mean[rnd]),
                    min_potential=float(series.minimum[rnd]),
                    max_potential=float(series.maximum[rnd]),
                    mean_infected_fraction=float(series.mean_infected_fraction[rnd]),
                    trials=cfg.trials,
                    seed=cfg.seed,
                )
            )
    return SweepResult(rows=rows, master_seed=cfg.seed)


def emit_csv(result: SweepResult, sink) -> None:
    """Canonical CSV: sorted rows, floats at 6 decimals."""
    close = False
    if isinstance(sink, (str, os.PathLike)):
        sink = open(sink, "w", encoding="utf-8", newline="\n")
        close = True
    try:
        sink.write(CSV_HEADER + "\n")
        for r in result.sorted_rows():
            sink.write(
                f"{r.strategy},{r.visibility:.6f},{r.budget:.6f},{r.round},"
                f"{r.mean_potential:.6f},{r.min_potential:.6f},{r.max_potential:.6f},"
                f"{r.mean_infected_fraction:.6f},{r.trials},{r.seed}\n"
            )
    finally:
        if close:
            sink.close()


def read_csv(source) -> SweepResult:
    """Parse emit_csv output back into a SweepResult."""
    close = False
    if isinstance(source, (str, os.PathLike)):
        source = open(source, "r", encoding="utf-8")
        close = True
    try:
        header = source.readline().strip()
        if header != CSV_HEADER:
            raise ValidationError(f"unexpected CSV header: {header!r}")
        rows = []
        seed = 0
        for line in source:
            parts = line.strip().split(",")
            if len(parts) != 10:
                raise ValidationError(f"bad CSV row: {line!r}")
            seed = int(parts[9])
            rows.append(
                SweepRow(
                    strategy=parts[0],
                    visibility=float(parts[1]),
                    budget=float(parts[2]),
                    round=int(parts[3]),
                    mean_potential=float(parts[4]),
                    min_potential=float(parts[5]),
                    max_potential=float(parts[6]),
                    mean_infected_fraction=float(parts[7]),
                    trials=int(parts[8]),
                    seed=seed,
                )
            )
        return SweepResult(rows=rows, master_seed=seed)
    finally:
        if close:
            source.close()


_PANEL_W = 180
_PANEL_H = 120
_MARGIN = 46


def _panel_svg(x0, y0, rows, rounds, label) -> list:
    """One potential-vs-round panel: min-max band plus mean line."""
    inner_w, inner_h = _PANEL_W - 30, _PANEL_H - 30
    ox, oy = x0 + 24, y0 + 6

    def px(rnd):
        return ox + inner_w * (rnd - 1) / max(rounds - 1, 1)

    def py(val):
        return oy + inner_h * (1.0 - min(max(val, 0.0), 1.0))

    parts = [
        f'<rect x="{ox}" y="{oy}" width="{inner_w}" height="{inner_h}" '
        'fill="white" stroke="#888" stroke-width="0.6"/>'
    ]
    if rows:
        band = [f"{px(r.round):.1f},{py(r.max_potential):.1f}" for r in rows]
        band += [f"{px(r.round):.1f},{py(r.min_potential):.1f}" for r in reversed(rows)]
        parts.append(f'<polygon points="{" ".join(band)}" fill="#aecbe8" stroke="none"/>')
        mean = " ".join(f"{px(r.round):.1f},{py(r.mean_potential):.1f}" for r in rows)
        parts.append(f'<polyline points="{mean}" fill="none" stroke="#1f4e8c" stroke-width="1.4"/>')
    parts.append(
        f'<text x="{ox + inner_w / 2:.1f}" y="{y0 + _PANEL_H - 6}" font-size="9" '
        f'text-anchor="middle" font-family="sans-serif">{label}</text>'
    )
    parts.append(
        f'<text x="{ox - 4}" y="{oy + 8}" font-size="8" text-anchor="end" font-family="sans-serif">1</text>'
    )
    parts.append(
        f'<text x="{ox - 4}" y="{oy + inner_h}" font-size="8" text-anchor="end" font-family="sans-serif">0</text>'
    )
    return parts


def emit_plot(result: SweepResult, sink) -> list:
    """One self-contained SVG per strategy: V rows by Q columns of panels.

    `sink` is a file path; with several strategies the strategy name is
    suffixed before the extension. Returns the list of paths written.
    """
    rows = result.sorted_rows()
    if not rows:
        raise ValidationError("nothing to plot: empty sweep result")
    strategies = sorted({r.strategy for r in rows})
    base, ext = os.path.splitext(str(sink))
    if not ext:
        ext = ".svg"
    written = []
    for strategy in strategies:
        srows = [r for r in rows if r.strategy == strategy]
        vs = sorted({r.visibility for r in srows})
        qs = sorted({r.budget for r in srows})
        rounds = max(r.round for r in srows)
        width = _MARGIN + len(qs) * _PANEL_W
        height = _MARGIN + len(vs) * _PANEL_H
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<text x="{width / 2:.0f}" y="16" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif">strategy: {strategy} (potential vs round, band = min..max)</text>',
        ]
        for vi, v in enumerate(vs):
            for qi, q in enumerate(qs):
                cell = [r for r in srows if r.visibility == v and r.budget == q]
                x0 = _MARGIN + qi * _PANEL_W
                y0 = _MARGIN + vi * _PANEL_H - 20
                label = f"V={v:g} Q={q:g}"
                parts.extend(_panel_svg(x0, y0, cell, rounds, label))
        parts.append("</svg>")
        path = f"{base}{ext}" if len(strategies) == 1 else f"{base}-{strategy}{ext}"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")
        written.append(path)
    return written


def analyze_graph(graph_path: str | None = None, synthetic: str | None = None, seed: int = 0) -> dict:
    """Structural report: sizes, degrees, potential ceiling, mixing gap."""
    cfg = ExperimentConfig(graph_path=graph_path, synthetic=synthetic, seed=seed,
                           strategies=("null",), visibility=(1.0,), budget=(0.0,))
    g = load_graph(cfg)
    lcc = largest_connected_component(g)
    chain = metrics.transition_matrix(lcc, "standard", lazy=True)
    gap = metrics.eigenvalue_gap(chain)
    report = {
        "nodes": g.node_count,
        "edges": g.edge_count,
        "mean_degree": 2.0 * g.edge_count / g.node_count,
        "largest_component_share": lcc.node_count / g.node_count,
        "network_max_potential": metrics.network_max_potential(lcc),
        "eigenvalue_gap": gap.value,
        "eigenvalue_gap_tolerance": gap.tolerance,
    }
    return report


def _split_among_agencies(g: Graph, parties: int, rng: random.Random, duplicate_rate: float = 0.15):
    """Deal edges to agencies; some edges get a second owner on purpose so
    the dedup step has real work to do."""
    edge_sets = [set() for _ in range(parties)]
    for u, v in g.edges():
        owner = rng.randrange(parties)
        edge_sets[owner].add((int(u), int(v)))
        if parties > 1 and rng.random() < duplicate_rate:
            other = rng.randrange(parties - 1)
            if other >= owner:
                other += 1
            edge_sets[other].add((int(u), int(v)))
    agencies = []
    for idx in range(parties):
        nodes = {u for u, v in edge_sets[idx]} | {v for u, v in edge_sets[idx]}
        agencies.append(AgencyShare(agency_id=idx, nodes=nodes, edges=edge_sets[idx]))
    return agencies


def mpc_demo(parties: int, graph_path: str | None = None, synthetic: str | None = None,
             steps: int = 10, key_bits: int = 1024, fixed_bits: int = 16, seed: int = 0) -> dict:
    """Full pipeline: PSI, labels, dedup, degree sums, encrypted walk.

    Returns a report with the deviation against the exact float walk, the
    bit-exactness flag against the plaintext fixed-point twin, and
    transcript statistics.
    """
    if parties < 1:
        raise ValidationError(f"need at least one party, got {parties}")
    cfg = ExperimentConfig(graph_path=graph_path, synthetic=synthetic, seed=seed,
                           strategies=("null",), visibility=(1.0,), budget=(0.0,))
    g = load_graph(cfg)
    rng = random.Random(seed)
    transcript = Transcript()

    agencies = _split_among_agencies(g, parties, rng)
    if parties > 1:
        inter = pairwise_intersections(agencies, rng, transcript)
    else:
        inter = {}
    labels = assign_labels(agencies, rng, intersections=inter, transcript=transcript)
    dedup_edges(agencies, rng, transcript)
    total = labels.total
    degree_modulus = 1 << 20
    if parties > 1:
        degrees = joint_degrees(agencies, total, degree_modulus, rng, transcript)
    else:
        degrees = joint_degrees(agencies, total, degree_modulus, rng)

    pub, shares = keygen_joint(parties, key_bits, rng)
    params = FixedPointParams(c=fixed_bits, k=steps, n=pub.n)
    v0 = np.full(total, 1.0 / total)
    result = distributed_walk(agencies, v0, steps, params, pub, shares, degrees, rng, transcript)

    twin = plaintext_fixed_walk(agencies, v0, steps, fixed_bits, pub.n, degrees)
    bit_exact = twin == result.integers

    # float oracle over the deduplicated union graph, in label space
    union_edges = set()
    for agency in agencies:
        union_edges |= agency.labeled_edges()
    from .graph import from_edges
    union = from_edges(np.asarray(sorted(union_edges), dtype=np.int64), node_count=total)
    chain = metrics.transition_matrix(union, "standard")
    oracle = metrics.power_iterate(v0, chain, steps)
    max_dev = float(np.abs(result.values - oracle).max())

    stats = transcript.stats()
    return {
        "parties": parties,
        "nodes": total,
        "edges": len(union_edges),
        "steps": steps,
        "key_bits": key_bits,
        "fixed_bits": fixed_bits,
        "bit_exact": bool(bit_exact),
        "max_float_deviation": max_dev,
        "declared_error_bound": result.error_bound,
        "transcript_messages": stats["messages"],
        "transcript_bytes": stats["bytes"],
        "transcript": transcript,
    }
