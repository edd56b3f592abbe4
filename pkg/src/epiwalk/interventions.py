"""Isolation planning under partial visibility and a node budget.

All planners see only the responder's view (adopters plus induced edges) and
may never isolate a non-adopter. Budgets count nodes, for every strategy;
super-link plans disable an edge by isolating both endpoint individuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError
from .graph import Graph, VisibilityView

__all__ = [
    "InterventionPlan",
    "PartitionAssignment",
    "plan_null",
    "plan_contact_tracing",
    "plan_super_spreader",
    "partition_visible",
    "plan_super_link",
]

# conductance below this accepts a sweep cut; see partition_visible
CONDUCTANCE_ACCEPT = 0.3
WALKS_PER_NODE = 5
WALK_LENGTH = 4


@dataclass(eq=False)
class InterventionPlan:
    """Budget-accounted set of nodes to isolate, with per-node reason tags."""

    budget_cap: int
    schedule: str = "upfront"
    nodes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def isolated_count(self) -> int:
        return len(self.nodes)

    def isolated_array(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=np.int64)

    @property
    def saturated(self) -> bool:
        return len(self.nodes) >= self.budget_cap

    def add(self, node: int, reason: str) -> bool:
        """Add one node, stopping exactly at the cap. True if added."""
        node = int(node)
        if node in self.provenance:
            return False
        if len(self.nodes) >= self.budget_cap:
            return False
        self.nodes.append(node)
        self.provenance[node] = reason
        return True


@dataclass(eq=False)
class PartitionAssignment:
    """Clustering of the visible subgraph with scored inter-cluster edges.

    clusters is indexed by the view-subgraph's compact node ids. cut_edges
    hold full-graph node ids, ranked by walk crossing frequency. edge_list /
    edge_traversals keep the walk counts for every visible edge; super-link
    planning falls back to them when no sparse cut exists.
    """

    clusters: np.ndarray
    cut_edges: np.ndarray
    cut_scores: np.ndarray
    edge_list: np.ndarray
    edge_traversals: np.ndarray


def plan_null(budget_cap: int = 0) -> InterventionPlan:
    """The do-nothing response: an empty plan regardless of budget."""
    return InterventionPlan(budget_cap=budget_cap, schedule="upfront")


def plan_contact_tracing(view: VisibilityView, visible_infected, plan: InterventionPlan) -> InterventionPlan:
    """Isolate visible infected nodes and their visible neighbors.

    Consumption order at the budget edge: infected first (ascending id),
    then their neighbors (ascending id). Saturation is a normal outcome.
    """
    infected = np.unique(np.asarray(visible_infected, dtype=np.int64))
    if infected.size and not view.adopter_mask[infected].all():
        raise ValidationError("visible_infected must be a subset of the adopters")
    for node in infected:
        plan.add(node, "traced")
        if plan.saturated:
            return plan
    if infected.size:
        compact = np.searchsorted(view.adopters, infected)
        sub = view.subgraph
        nbr_compact = np.unique(
            np.concatenate([sub.neighbors(c) for c in compact])
        ) if compact.size else np.array([], dtype=np.int64)
        for node in sub.original_ids[nbr_compact]:
            plan.add(node, "traced")
            if plan.saturated:
                return plan
    return plan


def _walk_visits(sub: Graph, rng: np.random.Generator, total_steps: int, length: int) -> np.ndarray:
    """Visit counts of standard random walks on the visible subgraph,
    started round-robin from every node, advanced in lockstep."""
    n = sub.node_count
    visits = np.zeros(n, dtype=np.int64)
    n_walks = max(1, math.ceil(total_steps / length))
    pos = np.arange(n_walks, dtype=np.int64) % n
    deg = sub.degrees
    for _ in range(length):
        r = rng.random(n_walks)
        d = deg[pos]
        movable = d > 0
        picks = (r * d).astype(np.int64)
        pos = pos.copy()
        pos[movable] = sub.indices[sub.indptr[pos[movable]] + picks[movable]]
        visits += np.bincount(pos, minlength=n)
    return visits


def plan_super_spreader(view: VisibilityView, budget: float, mode: str,
                        rng: np.random.Generator, walk_length: int | None = None) -> InterventionPlan:
    """Isolate the top-ranked visible nodes up front.

    "centralized" ranks by visible degree. "random-walk" ranks by visit
    frequency of many short walks (the decentralised degree estimate); the
    default walk length is ceil((log_dbar n)^2), the conservative cap.
    Ties break toward the lower node id.
    """
    n_vis = view.adopters.size
    if n_vis == 0:
        raise ValidationError("cannot plan on an empty visible subgraph")
    budget_cap = math.ceil(budget * view.full_node_count)
    plan = InterventionPlan(budget_cap=budget_cap, schedule="upfront")
    sub = view.subgraph
    if mode == "centralized":
        rank = sub.degrees.astype(np.float64)
    elif mode == "random-walk":
        mean_deg = 2.0 * sub.edge_count / n_vis
        if walk_length is None:
            base = max(mean_deg, 2.0)
            walk_length = max(1, math.ceil((math.log(max(n_vis, 2)) / math.log(base)) ** 2))
        visits = _walk_visits(sub, rng, total_steps=100 * n_vis, length=walk_length)
        rank = visits.astype(np.float64)
    else:
        raise ValidationError(f"unknown super-spreader mode {mode!r}")
    order = np.lexsort((sub.original_ids, -rank))
    for compact in order[:budget_cap]:
        plan.add(int(sub.original_ids[compact]), "super-spreader")
    return plan


def _metropolis_local(indptr, indices, deg):
    """Symmetric metropolis transition data for one component (local ids)."""
    n = len(indptr) - 1
    src = np.repeat(np.arange(n), np.diff(indptr))
    w = np.minimum(1.0 / deg[src], 1.0 / deg[indices])
    return src, w


_DENSE_EIG_LIMIT = 128


def _second_eigenvector(indptr, indices, deg, max_iter: int = 300, tol: float = 1e-5) -> np.ndarray:
    """Second eigenvector of the lazy metropolis chain.

    Small blocks get an exact dense solve; larger ones use deflated power
    iteration (stationary law is uniform, so deflation is mean removal).
    Best-effort precision: the sweep only needs the ordering.
    """
    n = len(indptr) - 1
    src, w = _metropolis_local(indptr, indices, deg)
    if n <= _DENSE_EIG_LIMIT:
        dense = np.zeros((n, n))
        dense[src, indices] = w
        np.fill_diagonal(dense, 1.0 - dense.sum(axis=1))
        dense = 0.5 * np.eye(n) + 0.5 * dense
        vals, vecs = np.linalg.eigh(dense)
        return vecs[:, -2]  # eigh sorts ascending; last is the stationary one
    p = sp.csr_matrix((w, (src, indices)), shape=(n, n))
    self_loop = 1.0 - np.asarray(p.sum(axis=1)).ravel()
    x = np.cos(np.arange(n) * 1.7) + 0.01  # fixed start; deterministic
    x -= x.mean()
    x /= np.linalg.norm(x)
    prev = x
    for _ in range(max_iter):
        y = 0.5 * x + 0.5 * (p @ x + self_loop * x)
        y -= y.mean()
        norm = np.linalg.norm(y)
        if norm < 1e-15:
            break
        y /= norm
        if np.abs(y - prev).max() < tol:
            return y
        prev, x = x, y
    return x


def _sweep_cut(indptr, indices, deg, order):
    """Best prefix cut along an ordering: (conductance, prefix_len).

    An edge contributes to the cut for every prefix that contains exactly
    one endpoint, i.e. sizes min(pos)+1 .. max(pos); accumulate those
    intervals with a difference array.
    """
    n = len(order)
    if n < 2:
        return math.inf, 0
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    src = np.repeat(np.arange(n), np.diff(indptr))
    undirected = src < indices
    lo = np.minimum(pos[src[undirected]], pos[indices[undirected]])
    hi = np.maximum(pos[src[undirected]], pos[indices[undirected]])
    delta = np.zeros(n + 1, dtype=np.int64)
    np.add.at(delta, lo + 1, 1)
    np.add.at(delta, hi + 1, -1)
    cut = np.cumsum(delta)[1:n]  # cut size for prefixes of length 1..n-1
    vol = np.cumsum(deg[order])[: n - 1]
    denom = np.minimum(vol, int(deg.sum()) - vol)
    with np.errstate(divide="ignore"):
        phi = np.where(denom > 0, cut / np.maximum(denom, 1), math.inf)
    best = int(np.argmin(phi))
    return float(phi[best]), best + 1


def _metropolis_step_table(indptr, indices, deg):
    """Padded cumulative transition table for vectorized metropolis walks.

    Row v holds the running probabilities of its neighbors; drawing r and
    taking the first column with cum > r walks the chain, with overflow
    (r beyond the last neighbor) meaning the self-loop.
    """
    n = len(indptr) - 1
    counts = np.diff(indptr)
    maxd = int(counts.max()) if n else 0
    cum = np.full((n, maxd), 2.0)
    for v in range(n):
        nbrs = indices[indptr[v] : indptr[v + 1]]
        if nbrs.size:
            w = np.minimum(1.0 / deg[v], 1.0 / deg[nbrs])
            cum[v, : nbrs.size] = np.cumsum(w)
    pad_nbrs = np.full((n, maxd), -1, dtype=np.int64)
    for v in range(n):
        nbrs = indices[indptr[v] : indptr[v + 1]]
        pad_nbrs[v, : nbrs.size] = nbrs
    return cum, pad_nbrs


def _induced_csr(sub: Graph, nodes: np.ndarray):
    """Local CSR of the subgraph induced on `nodes` (local ids 0..len-1)."""
    remap = np.full(sub.node_count, -1, dtype=np.int64)
    remap[nodes] = np.arange(nodes.size)
    starts = sub.indptr[nodes]
    lens = sub.indptr[nodes + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(nodes.size + 1, dtype=np.int64), np.array([], dtype=np.int64)
    offsets = np.repeat(np.cumsum(lens) - lens, lens)
    flat = np.repeat(starts, lens) + (np.arange(total) - offsets)
    mapped = remap[sub.indices[flat]]
    keep = mapped >= 0
    row_of = np.repeat(np.arange(nodes.size), lens)
    counts = np.bincount(row_of[keep], minlength=nodes.size)
    loc_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return loc_ptr, mapped[keep]


def partition_visible(view: VisibilityView, cluster_count_hint: int | None,
                      rng: np.random.Generator) -> PartitionAssignment:
    """Cluster the visible subgraph by mixing behavior and score cut edges.

    Recursive sweep cuts over the second eigenvector of the (lazy)
    metropolis chain split each connected component while a cut below the
    conductance threshold exists (or until the hint count). Edges are then
    scored by how often short metropolis walks traverse them; crossings of
    cluster boundaries rank the cut edges.
    """
    sub = view.subgraph
    n = sub.node_count
    if n < 2:
        raise ValidationError("partitioning needs at least 2 visible nodes")
    deg = sub.degrees
    if sub.edge_count:
        n_comp, comp_labels = connected_components(sub.to_sparse(), directed=False)
    else:
        n_comp, comp_labels = n, np.arange(n)

    clusters = np.full(n, -1, dtype=np.int64)
    next_cluster = 0
    splits_left = (cluster_count_hint - n_comp) if cluster_count_hint is not None else n

    def assign(nodes: np.ndarray) -> None:
        nonlocal next_cluster
        clusters[nodes] = next_cluster
        next_cluster += 1

    def split(nodes: np.ndarray) -> None:
        nonlocal splits_left
        if nodes.size < 4 or splits_left <= 0:
            assign(nodes)
            return
        loc_ptr, loc_ind = _induced_csr(sub, nodes)
        loc_deg = np.diff(loc_ptr)
        if loc_deg.max() == 0:
            assign(nodes)
            return
        v2 = _second_eigenvector(loc_ptr, loc_ind, np.maximum(loc_deg, 1).astype(np.float64))
        order = np.lexsort((np.arange(nodes.size), v2))
        phi, prefix = _sweep_cut(loc_ptr, loc_ind, loc_deg, order)
        if phi >= CONDUCTANCE_ACCEPT or prefix == 0:
            assign(nodes)
            return
        splits_left -= 1
        split(nodes[np.sort(order[:prefix])])
        split(nodes[np.sort(order[prefix:])])

    for c in range(n_comp):
        split(np.flatnonzero(comp_labels == c))

    edges = sub.edges()
    if edges.size:
        crossing_mask = clusters[edges[:, 0]] != clusters[edges[:, 1]]
    else:
        crossing_mask = np.zeros(0, dtype=bool)

    # Monte Carlo edge traversal counts from short metropolis walks
    traversals = np.zeros(edges.shape[0], dtype=np.int64)
    if edges.size:
        edge_keys = edges[:, 0] * n + edges[:, 1]  # already sorted (u < v)
        cum, pad_nbrs = _metropolis_step_table(sub.indptr, sub.indices, deg.astype(np.float64))
        pos = np.repeat(np.arange(n), WALKS_PER_NODE)
        hit_keys = []
        for _ in range(WALK_LENGTH):
            r = rng.random(pos.size)
            rows = cum[pos]
            col = (rows <= r[:, None]).sum(axis=1)
            nxt = pos.copy()
            sel = np.flatnonzero(col < pad_nbrs.shape[1])
            sel = sel[pad_nbrs[pos[sel], col[sel]] >= 0]
            nxt[sel] = pad_nbrs[pos[sel], col[sel]]
            stepped = nxt != pos
            if stepped.any():
                a = np.minimum(pos[stepped], nxt[stepped])
                b = np.maximum(pos[stepped], nxt[stepped])
                hit_keys.append(a * n + b)
            pos = nxt
        if hit_keys:
            all_hits = np.concatenate(hit_keys)
            idx = np.searchsorted(edge_keys, all_hits)
            traversals = np.bincount(idx, minlength=edges.shape[0]).astype(np.int64)

    full_edges = sub.original_ids[edges] if edges.size else np.zeros((0, 2), dtype=np.int64)
    cut_edges = full_edges[crossing_mask] if edges.size else np.zeros((0, 2), dtype=np.int64)
    cut_scores = traversals[crossing_mask] if edges.size else np.zeros(0, dtype=np.int64)
    if cut_edges.size:
        order = np.lexsort((cut_edges[:, 1], cut_edges[:, 0], -cut_scores))
        cut_edges = cut_edges[order]
        cut_scores = cut_scores[order]
    return PartitionAssignment(
        clusters=clusters,
        cut_edges=cut_edges,
        cut_scores=cut_scores,
        edge_list=full_edges,
        edge_traversals=traversals,
    )


def plan_super_link(view: VisibilityView, budget: float, rng: np.random.Generator) -> InterventionPlan:
    """Isolate endpoints of the highest-ranked inter-cluster edges.

    Cut edges are consumed in crossing-score order; if budget remains (or no
    sparse cut exists at all) the remaining visible edges are ranked by raw
    walk traversal counts so the budget is still spent on edge endpoints.
    A final odd slot goes to the higher-degree endpoint (tie: lower id).
    """
    part = partition_visible(view, None, rng)
    budget_cap = math.ceil(budget * view.full_node_count)
    plan = InterventionPlan(budget_cap=budget_cap, schedule="upfront")
    sub = view.subgraph
    full_deg = {int(fid): int(d) for fid, d in zip(sub.original_ids, sub.degrees)}

    nf = view.full_node_count
    if part.edge_list.size:
        all_keys = part.edge_list[:, 0] * nf + part.edge_list[:, 1]
        cut_keys = part.cut_edges[:, 0] * nf + part.cut_edges[:, 1] if part.cut_edges.size else np.zeros(0, dtype=np.int64)
        rest_mask = ~np.isin(all_keys, cut_keys)
        rest_edges = part.edge_list[rest_mask]
        rest_scores = part.edge_traversals[rest_mask]
    else:
        rest_edges = part.edge_list
        rest_scores = part.edge_traversals
    if rest_edges.size:
        order = np.lexsort((rest_edges[:, 1], rest_edges[:, 0], -rest_scores))
        rest_edges = rest_edges[order]

    for u, v in [*map(tuple, part.cut_edges), *map(tuple, rest_edges)]:
        u, v = int(u), int(v)
        have_u = u in plan.provenance
        have_v = v in plan.provenance
        missing = (0 if have_u else 1) + (0 if have_v else 1)
        room = plan.budget_cap - plan.isolated_count()
        if room <= 0:
            break
        if missing == 0:
            continue
        if missing <= room:
            plan.add(u, "super-link-endpoint")
            plan.add(v, "super-link-endpoint")
        else:
            # one slot left for a fresh pair: higher degree wins, tie lower id
            du, dv = full_deg[u], full_deg[v]
            pick = u if (du, -u) >= (dv, -v) else v
            plan.add(pick, "super-link-endpoint")
            break
    return plan
