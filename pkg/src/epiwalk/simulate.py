"""Round-based epidemic spreading with isolation restricting transmission.

Each round, every non-isolated infected node draws one uniform neighbor from
its non-isolated neighbors; susceptible targets convert (100% attack rate).
Updates are synchronous: all conversions land at round end, and infected
nodes are processed in ascending id so a trial is a pure function of
(graph, plan schedule, generator state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import interventions
from .errors import ValidationError
from .graph import Graph, VisibilityView

__all__ = [
    "Status",
    "EpidemicState",
    "TransmissionEvent",
    "TrialResult",
    "STRATEGIES",
    "seed_infection",
    "spread_round",
    "run_trial",
    "measure_r0",
    "replay_events",
]

STRATEGIES = ("null", "ct", "spreader-central", "spreader-walk", "superlink")


class Status(IntEnum):
    SUSCEPTIBLE = 0
    INFECTED = 1
    ISOLATED_SUSCEPTIBLE = 2
    ISOLATED_INFECTED = 3


@dataclass(frozen=True)
class TransmissionEvent:
    source: int
    target: int
    round: int


@dataclass(eq=False)
class EpidemicState:
    status: np.ndarray
    round: int
    infection_round: np.ndarray
    events: list = field(default_factory=list)

    @property
    def infected_count(self) -> int:
        return int(np.count_nonzero((self.status == Status.INFECTED) | (self.status == Status.ISOLATED_INFECTED)))

    @property
    def isolated_count(self) -> int:
        return int(np.count_nonzero(self.status >= Status.ISOLATED_SUSCEPTIBLE))


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Everything a single trial produced, in per-round form."""

    rounds: int
    infection_round: np.ndarray
    infected_count_by_round: np.ndarray
    isolated_count_by_round: np.ndarray
    index_cases: np.ndarray
    index_case_secondary_counts: np.ndarray
    events: np.ndarray
    final_status: np.ndarray
    budget_cap: int

    @property
    def infected_fraction_by_round(self) -> np.ndarray:
        return self.infected_count_by_round / self.final_status.size

    @property
    def new_infections_by_round(self) -> np.ndarray:
        out = np.diff(self.infected_count_by_round, prepend=0)
        out[0] = self.infected_count_by_round[0]
        return out


def seed_infection(g: Graph, count_or_fraction, rng: np.random.Generator) -> EpidemicState:
    """Infect an exact number (int), ceil(fraction*N) (float), or an explicit
    node array of index cases."""
    n = g.node_count
    if isinstance(count_or_fraction, (list, tuple, np.ndarray)):
        seeds = np.unique(np.asarray(count_or_fraction, dtype=np.int64))
        if seeds.size == 0 or seeds.min() < 0 or seeds.max() >= n:
            raise ValidationError("explicit seed nodes must be nonempty and in range")
    else:
        if isinstance(count_or_fraction, float):
            if not 0.0 < count_or_fraction <= 1.0:
                raise ValidationError(f"seed fraction must be in (0,1], got {count_or_fraction}")
            k = math.ceil(count_or_fraction * n)
        else:
            k = int(count_or_fraction)
        if not 0 < k <= n:
            raise ValidationError(f"seed count {k} outside 1..{n}")
        seeds = np.sort(rng.permutation(n)[:k])
    status = np.zeros(n, dtype=np.uint8)
    status[seeds] = Status.INFECTED
    infection_round = np.full(n, -1, dtype=np.int32)
    infection_round[seeds] = 0
    return EpidemicState(status=status, round=0, infection_round=infection_round)


class _FilteredAdjacency:
    """CSR adjacency restricted to edges between non-isolated nodes."""

    __slots__ = ("indptr", "indices")

    def __init__(self, g: Graph, isolated_mask: np.ndarray):
        keep = ~isolated_mask[g.indices] & np.repeat(~isolated_mask, g.degrees)
        self.indices = g.indices[keep]
        src = np.repeat(np.arange(g.node_count), g.degrees)[keep]
        counts = np.bincount(src, minlength=g.node_count)
        self.indptr = np.concatenate([[0], np.cumsum(counts)])


def _segment_gather(indptr, indices, rows):
    """Concatenate the neighbor lists of the given rows."""
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.array([], dtype=np.int64), lens
    offsets = np.repeat(np.cumsum(lens) - lens, lens)
    flat = np.repeat(starts, lens) + (np.arange(total) - offsets)
    return indices[flat], lens


def _advance(state: EpidemicState, adj: _FilteredAdjacency, rng: np.random.Generator,
             draw_susceptible_only: bool, secondary: np.ndarray | None,
             collect_events: bool) -> bool:
    """One synchronous spreading round, in place. False once no infected
    node can reach a susceptible neighbor (the trial is over)."""
    status = state.status
    active = np.flatnonzero(status == Status.INFECTED)
    state.round += 1
    if active.size == 0:
        return False
    nbrs, lens = _segment_gather(adj.indptr, adj.indices, active)
    if nbrs.size == 0:
        return False
    nbr_status = status[nbrs]
    if not np.any(nbr_status == Status.SUSCEPTIBLE):
        return False

    r = rng.random(active.size)
    if draw_susceptible_only:
        sus = nbr_status == Status.SUSCEPTIBLE
        sources, targets = [], []
        pos = 0
        for i, a in enumerate(active):
            row = nbrs[pos : pos + lens[i]]
            row_sus = row[sus[pos : pos + lens[i]]]
            pos += lens[i]
            if row_sus.size == 0:
                continue
            sources.append(a)
            targets.append(row_sus[int(r[i] * row_sus.size)])
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
    else:
        drawable = lens > 0
        picks = (r * lens).astype(np.int64)
        sources = active[drawable]
        targets = adj.indices[adj.indptr[sources] + picks[drawable]]
        hit = status[targets] == Status.SUSCEPTIBLE
        sources, targets = sources[hit], targets[hit]

    if targets.size:
        if collect_events:
            state.events.extend(
                TransmissionEvent(int(s), int(t), state.round) for s, t in zip(sources, targets)
            )
        if secondary is not None:
            np.add.at(secondary, sources, 1)
        status[targets] = Status.INFECTED
        state.infection_round[targets] = state.round
    return True


def spread_round(g: Graph, state: EpidemicState, rng: np.random.Generator,
                 draw_susceptible_only: bool = False) -> EpidemicState:
    """Pure one-round step: returns the successor state, input untouched."""
    nxt = EpidemicState(
        status=state.status.copy(),
        round=state.round,
        infection_round=state.infection_round.copy(),
        events=list(state.events),
    )
    isolated = nxt.status >= Status.ISOLATED_SUSCEPTIBLE
    adj = _FilteredAdjacency(g, isolated)
    _advance(nxt, adj, rng, draw_susceptible_only, None, True)
    return nxt


def _apply_isolation(state: EpidemicState, nodes: np.ndarray) -> None:
    sel = np.asarray(nodes, dtype=np.int64)
    if sel.size == 0:
        return
    status = state.status
    was_sus = status[sel] == Status.SUSCEPTIBLE
    was_inf = status[sel] == Status.INFECTED
    status[sel[was_sus]] = Status.ISOLATED_SUSCEPTIBLE
    status[sel[was_inf]] = Status.ISOLATED_INFECTED


def run_trial(g: Graph, strategy: str, view: VisibilityView, budget: float, rounds: int,
              rng: np.random.Generator, *, seeds=0.01, draw_susceptible_only: bool = False,
              collect_events: bool = True) -> TrialResult:
    """Two-phase trial: intervention planning on the partial view, spreading
    on the full graph.

    Super-spreader and super-link plans are placed up front, before the first
    spreading round; contact tracing alternates with spreading (trace after
    each round). The null strategy never isolates. Deterministic for a fixed
    (graph, strategy, view, budget, seeds, generator).
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if rounds < 1:
        raise ValidationError(f"need at least one round, got {rounds}")
    if not 0.0 <= budget <= 1.0:
        raise ValidationError(f"isolation budget must be in [0,1], got {budget}")

    n = g.node_count
    budget_cap = math.ceil(budget * n)
    state = seed_infection(g, seeds, rng)
    index_cases = np.flatnonzero(state.status == Status.INFECTED)
    secondary = np.zeros(n, dtype=np.int64)

    if strategy == "null":
        plan = interventions.plan_null()
    elif strategy == "ct":
        plan = interventions.InterventionPlan(budget_cap=budget_cap, schedule="per-round")
    elif strategy in ("spreader-central", "spreader-walk"):
        mode = "centralized" if strategy == "spreader-central" else "random-walk"
        plan = interventions.plan_super_spreader(view, budget, mode, rng)
    else:
        plan = interventions.plan_super_link(view, budget, rng)

    _apply_isolation(state, plan.isolated_array())
    isolated_mask = state.status >= Status.ISOLATED_SUSCEPTIBLE
    adj = _FilteredAdjacency(g, isolated_mask)

    infected_counts = np.zeros(rounds + 1, dtype=np.int64)
    isolated_counts = np.zeros(rounds + 1, dtype=np.int64)
    infected_counts[0] = state.infected_count
    isolated_counts[0] = state.isolated_count

    live = True
    for rnd in range(1, rounds + 1):
        if live:
            live = _advance(state, adj, rng, draw_susceptible_only, secondary, collect_events)
            if state.round != rnd:
                # _advance always increments; keep the bookkeeping aligned
                state.round = rnd
        else:
            state.round = rnd
        if strategy == "ct":
            infected_now = (state.status == Status.INFECTED) | (state.status == Status.ISOLATED_INFECTED)
            visible_infected = np.flatnonzero(infected_now & view.adopter_mask)
            before = plan.isolated_count()
            interventions.plan_contact_tracing(view, visible_infected, plan)
            if plan.isolated_count() != before:
                _apply_isolation(state, plan.isolated_array())
                adj = _FilteredAdjacency(g, state.status >= Status.ISOLATED_SUSCEPTIBLE)
                live = True  # isolation changed the reachable set; recheck
        infected_counts[rnd] = state.infected_count
        isolated_counts[rnd] = state.isolated_count
        if isolated_counts[rnd] > budget_cap:
            raise ValidationError(
                f"isolation budget violated: {isolated_counts[rnd]} > cap {budget_cap}"
            )

    if collect_events:
        events = np.array([(e.round, e.source, e.target) for e in state.events], dtype=np.int64).reshape(-1, 3)
    else:
        events = np.zeros((0, 3), dtype=np.int64)
    return TrialResult(
        rounds=rounds,
        infection_round=state.infection_round,
        infected_count_by_round=infected_counts,
        isolated_count_by_round=isolated_counts,
        index_cases=index_cases,
        index_case_secondary_counts=secondary[index_cases],
        events=events,
        final_status=state.status,
        budget_cap=budget_cap,
    )


def measure_r0(results) -> float:
    """Mean number of direct secondary infections per index case."""
    counts = [tr.index_case_secondary_counts for tr in results if tr.index_cases.size]
    if not counts:
        raise ValidationError("need at least one trial with an index case")
    return float(np.concatenate(counts).mean())


def replay_events(n: int, index_cases: np.ndarray, events: np.ndarray,
                  isolated_final: np.ndarray) -> np.ndarray:
    """Rebuild final statuses from seeds plus the transmission log."""
    status = np.zeros(n, dtype=np.uint8)
    status[index_cases] = Status.INFECTED
    for _, _, target in events:
        status[target] = Status.INFECTED
    infected = status == Status.INFECTED
    status[isolated_final & infected] = Status.ISOLATED_INFECTED
    status[isolated_final & ~infected] = Status.ISOLATED_SUSCEPTIBLE
    return status
