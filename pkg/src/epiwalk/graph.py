"""Proximity graphs: loading, validation, partial-visibility views, synthesis.

Graphs are stored undirected in a compact CSR layout (``indptr`` /
``indices``) with node ids compacted to ``0..N-1``. The original ids from the
input file are kept in ``original_ids`` so reports can refer back to them.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import EdgeListError, EmptyGraphError, ValidationError

__all__ = [
    "Graph",
    "VisibilityView",
    "DegreeDistribution",
    "from_edges",
    "load_edge_list",
    "sample_visibility",
    "generate_synthetic",
    "degree_distribution",
    "largest_connected_component",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph in CSR form.

    Invariants: no self-loops, no duplicate edges, adjacency symmetric,
    neighbor lists sorted, sum(degrees) == 2 * edge_count.
    """

    indptr: np.ndarray
    indices: np.ndarray
    original_ids: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """All edges as an (E, 2) array with u < v."""
        src = np.repeat(np.arange(self.node_count), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def to_sparse(self) -> sp.csr_matrix:
        """0/1 adjacency as a scipy CSR matrix."""
        n = self.node_count
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(n, n))

    def check_invariants(self) -> None:
        """Raise ValidationError if any structural invariant is violated."""
        n = self.node_count
        if self.indices.size != self.indptr[-1]:
            raise ValidationError("indptr does not cover indices")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValidationError("neighbor id out of range")
        deg = self.degrees
        if int(deg.sum()) != 2 * self.edge_count:
            raise ValidationError("degree sum does not equal 2|E|")
        adj = self.to_sparse()
        if adj.diagonal().any():
            raise ValidationError("self-loop present")
        if (adj != adj.T).nnz != 0:
            raise ValidationError("adjacency not symmetric")
        for u in range(n):
            row = self.neighbors(u)
            if row.size and (np.any(np.diff(row) <= 0)):
                raise ValidationError(f"neighbor list of {u} not strictly sorted")


@dataclass(frozen=True, eq=False)
class VisibilityView:
    """The responder's partial view: adopter nodes plus induced edges.

    ``subgraph`` is the induced graph with its own compact ids;
    ``subgraph.original_ids`` maps those back to full-graph node ids.
    """

    visibility: float
    adopters: np.ndarray
    adopter_mask: np.ndarray
    visible_edges: np.ndarray
    subgraph: Graph

    @property
    def full_node_count(self) -> int:
        return self.adopter_mask.size


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    counts: np.ndarray
    probabilities: np.ndarray


def from_edges(edges, node_count: int | None = None, original_ids=None) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs.

    Self-loops and duplicate edges are dropped. Node ids must already be
    compact (0..node_count-1); use load_edge_list for raw id spaces.
    """
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if node_count is None:
        node_count = int(arr.max()) + 1 if arr.size else 0
    if node_count == 0:
        raise EmptyGraphError("graph has no nodes")
    keep = arr[:, 0] != arr[:, 1]
    arr = arr[keep]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    und = np.unique(np.column_stack([lo, hi]), axis=0) if arr.size else arr.reshape(0, 2)
    both = np.concatenate([und, und[:, ::-1]]) if und.size else und.reshape(0, 2)
    order = np.lexsort((both[:, 1], both[:, 0])) if both.size else np.array([], dtype=np.int64)
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=node_count) if both.size else np.zeros(node_count, dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = both[:, 1].astype(np.int64) if both.size else np.array([], dtype=np.int64)
    if original_ids is None:
        original_ids = np.arange(node_count, dtype=np.int64)
    return Graph(indptr=indptr, indices=indices, original_ids=np.asarray(original_ids, dtype=np.int64))


def load_edge_list(source) -> Graph:
    """Load a SNAP-style edge list: one "u v" pair per line, '#' comments.

    Ids are compacted to 0..N-1 (ascending original id); the original ids are
    retained on the returned graph. Duplicate directions collapse to one
    undirected edge and self-loops are dropped.
    """
    if isinstance(source, (str, bytes)) and not (isinstance(source, bytes) and b"\n" in source):
        if isinstance(source, bytes):
            stream = io.BytesIO(source)
        else:
            stream = open(source, "rb")
    elif isinstance(source, bytes):
        stream = io.BytesIO(source)
    else:
        stream = source

    pairs = []
    try:
        for lineno, raw in enumerate(stream, start=1):
            if isinstance(raw, bytes):
                line = raw.decode("utf-8", errors="strict").strip()
            else:
                line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListError(f"expected two ids, got {line!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"non-integer id in {line!r}", lineno) from None
            if u < 0 or v < 0:
                raise EdgeListError(f"negative id in {line!r}", lineno)
            pairs.append((u, v))
    finally:
        if stream is not source:
            stream.close()

    if not pairs:
        raise EmptyGraphError("edge list contains no edges")
    arr = np.asarray(pairs, dtype=np.int64)
    ids = np.unique(arr)
    compact = np.searchsorted(ids, arr)
    return from_edges(compact, node_count=ids.size, original_ids=ids)


def sample_visibility(g: Graph, v: float, rng: np.random.Generator) -> VisibilityView:
    """Sample ceil(v*N) adopters uniformly without replacement.

    The visible edge set is the subset of full-graph edges with both
    endpoints adopters. Bit-reproducible for a fixed generator state.
    """
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"visibility must be in [0,1], got {v}")
    n = g.node_count
    k = math.ceil(v * n)
    adopters = np.sort(rng.permutation(n)[:k])
    mask = np.zeros(n, dtype=bool)
    mask[adopters] = True
    edges = g.edges()
    if edges.size:
        vis = edges[mask[edges[:, 0]] & mask[edges[:, 1]]]
    else:
        vis = edges
    # compact induced subgraph over the adopters
    if k:
        remap = np.full(n, -1, dtype=np.int64)
        remap[adopters] = np.arange(k)
        sub_edges = remap[vis] if vis.size else vis
        sub = from_edges(sub_edges, node_count=k, original_ids=adopters)
    else:
        sub = Graph(
            indptr=np.zeros(1, dtype=np.int64),
            indices=np.array([], dtype=np.int64),
            original_ids=np.array([], dtype=np.int64),
        )
    return VisibilityView(
        visibility=v, adopters=adopters, adopter_mask=mask, visible_edges=vis, subgraph=sub
    )


def generate_synthetic(model: str, params: dict, rng: np.random.Generator) -> Graph:
    """Generate a connected desk-scale graph.

    Models: "small-world" (n, k, beta), "preferential-attachment" (n, m),
    "erdos-renyi" (n, p). Disconnected draws are reduced to their largest
    component, so the returned node count may be below n for sparse params.
    """
    n = int(params.get("n", 0))
    if n < 3:
        raise ValidationError(f"need n >= 3, got {n}")
    seed = int(rng.integers(0, 2**31 - 1))
    if model == "small-world":
        k = int(params.get("k", 0))
        beta = float(params.get("beta", 0.0))
        if k < 2 or k >= n or k % 2 != 0:
            raise ValidationError(f"small-world needs even 2 <= k < n, got k={k}")
        if not 0.0 <= beta <= 1.0:
            raise ValidationError(f"rewiring beta must be in [0,1], got {beta}")
        gnx = nx.watts_strogatz_graph(n, k, beta, seed=seed)
    elif model == "preferential-attachment":
        m = int(params.get("m", 0))
        if m < 1 or m >= n:
            raise ValidationError(f"preferential attachment needs 1 <= m < n, got m={m}")
        gnx = nx.barabasi_albert_graph(n, m, seed=seed)
    elif model == "erdos-renyi":
        p = float(params.get("p", -1.0))
        if not 0.0 < p <= 1.0:
            raise ValidationError(f"edge probability must be in (0,1], got {p}")
        if p * (n - 1) < 2.0:
            raise ValidationError(f"mean degree {p * (n - 1):.2f} below 2; graph would shatter")
        gnx = nx.gnp_random_graph(n, p, seed=seed)
    else:
        raise ValidationError(f"unknown synthetic model {model!r}")

    edge_arr = np.asarray(list(gnx.edges()), dtype=np.int64)
    if edge_arr.size == 0:
        raise ValidationError("generated graph has no edges")
    g = from_edges(edge_arr, node_count=n)
    return largest_connected_component(g)


def degree_distribution(g: Graph) -> DegreeDistribution:
    """Per-node degree probabilities d_i / 2|E| (the walk's stationary law)."""
    if g.edge_count == 0:
        raise EmptyGraphError("degree distribution undefined for an edgeless graph")
    counts = g.degrees
    return DegreeDistribution(counts=counts, probabilities=counts / (2.0 * g.edge_count))


def largest_connected_component(g: Graph) -> Graph:
    """Subgraph on the largest component, ids recompacted.

    Size ties break toward the component containing the smallest original id.
    """
    n_comp, labels = connected_components(g.to_sparse(), directed=False)
    if n_comp <= 1:
        return g
    sizes = np.bincount(labels, minlength=n_comp)
    best = sizes.max()
    # among largest components, pick the one whose member has the smallest
    # original id (labels are assigned in node order, so the first qualifying
    # label wins)
    candidates = np.flatnonzero(sizes == best)
    first_orig = np.full(n_comp, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first_orig, labels, g.original_ids)
    chosen = candidates[np.argmin(first_orig[candidates])]
    keep = np.flatnonzero(labels == chosen)
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    edges = g.edges()
    kept_edges = edges[(remap[edges[:, 0]] >= 0) & (remap[edges[:, 1]] >= 0)]
    return from_edges(remap[kept_edges], node_count=keep.size, original_ids=g.original_ids[keep])
