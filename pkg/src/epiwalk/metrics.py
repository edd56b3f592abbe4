"""Information-theoretic and spectral measures for walk-driven epidemics.

Conventions used throughout:
  * walk-state vectors are row vectors; one step is ``q @ P``
  * 0 * log2(0) == 0
  * the lazy chain (I + P) / 2 is used wherever convergence must be
    guaranteed (bipartite-safe); it leaves the stationary law unchanged
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, EmptyGraphError, ValidationError
from .graph import Graph

__all__ = [
    "TransitionMatrix",
    "PotentialSeries",
    "EigenvalueGap",
    "transition_matrix",
    "transmission_potential",
    "infection_probabilities",
    "power_iterate",
    "stationary_distribution",
    "relative_pointwise_distance",
    "network_max_potential",
    "chain_containment_probability",
    "full_visibility_bound",
    "eigenvalue_gap",
    "potential_series",
    "series_from_counts",
]

_EIG_SEED = 0xE16


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Sparse row-stochastic walk matrix over graph nodes.

    variant "standard" uses 1/d(source); "metropolis" uses
    min(1/d_i, 1/d_j) with the row deficit kept as a self-loop.
    """

    matrix: sp.csr_matrix
    variant: str
    lazy: bool

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenvalueGap:
    """Spectral gap 1 - |lambda_2| with the tolerance it was computed to."""

    value: float
    lambda2: float
    tolerance: float
    iterations: int


@dataclass(frozen=True, eq=False)
class PotentialSeries:
    """Per-round potential aggregated over trials (min <= mean <= max)."""

    trial_count: int
    mode: str
    mean: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    mean_infected_fraction: np.ndarray


def transition_matrix(g: Graph, variant: str = "standard", lazy: bool = False) -> TransitionMatrix:
    """Build the walk matrix for a graph. Isolated nodes get a self-loop."""
    n = g.node_count
    deg = g.degrees.astype(np.float64)
    src = np.repeat(np.arange(n), g.degrees)
    dst = g.indices
    if variant == "standard":
        data = 1.0 / deg[src]
        diag = np.zeros(n)
    elif variant == "metropolis":
        data = np.minimum(1.0 / deg[src], 1.0 / deg[dst])
        row_sum = np.zeros(n)
        np.add.at(row_sum, src, data)
        diag = 1.0 - row_sum
    else:
        raise ValidationError(f"unknown transition variant {variant!r}")
    diag[deg == 0] = 1.0
    rows = np.concatenate([src, np.arange(n)])
    cols = np.concatenate([dst, np.arange(n)])
    vals = np.concatenate([data, diag])
    keep = vals != 0.0
    m = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
    if lazy:
        m = 0.5 * sp.identity(n, format="csr") + 0.5 * m
        m = m.tocsr()
    return TransitionMatrix(matrix=m, variant=variant, lazy=lazy)


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def transmission_potential(beta, n: int) -> float:
    """Normalized entropy of a per-node infection-likelihood vector.

    Computes -sum(b*log2(b)) / log2(n). The vector is taken as given (its
    entries are probabilities, not necessarily a distribution over nodes).
    """
    if n < 2:
        raise ValidationError(f"need at least 2 nodes, got {n}")
    b = np.asarray(beta, dtype=np.float64)
    if b.size and (b.min() < -1e-12 or b.max() > 1.0 + 1e-12):
        raise ValidationError("likelihood entries must lie in [0,1]")
    b = np.clip(b, 0.0, 1.0)
    return _entropy_bits(b) / math.log2(n)


def infection_probabilities(trials, round_t: int) -> np.ndarray:
    """Monte Carlo per-node probability of being infected by a given round.

    Entry i is the fraction of trials in which node i was infected at any
    round <= round_t (seeds count as round 0).
    """
    if not trials:
        raise ValidationError("need at least one trial")
    acc = None
    for tr in trials:
        rounds = tr.infection_round
        hit = (rounds >= 0) & (rounds <= round_t)
        acc = hit.astype(np.float64) if acc is None else acc + hit
    return acc / len(trials)


def power_iterate(q0, p: TransitionMatrix, t: int) -> np.ndarray:
    """Advance a walk-state row vector t steps: q(t) = q(0) P^t."""
    q = np.asarray(q0, dtype=np.float64)
    if q.shape != (p.node_count,):
        raise ValidationError(f"vector length {q.size} != node count {p.node_count}")
    if abs(q.sum() - 1.0) > 1e-9:
        raise ValidationError("walk-state vector must sum to 1")
    if t < 0:
        raise ValidationError("step count must be nonnegative")
    for _ in range(t):
        q = q @ p.matrix
    return q


def stationary_distribution(p: TransitionMatrix, tol: float = 1e-10, max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary law pi with ||pi P - pi||_inf <= tol.

    Iterates the lazy version of the chain (convergent on bipartite graphs
    too); the residual is checked against the chain as given.
    """
    n = p.node_count
    q = np.full(n, 1.0 / n)
    m = p.matrix
    check_every = 8
    for it in range(max_iter):
        q = 0.5 * q + 0.5 * (q @ m) if not p.lazy else q @ m
        if it % check_every == 0:
            residual = float(np.abs(q @ m - q).max())
            if residual <= tol:
                return q / q.sum()
    residual = float(np.abs(q @ m - q).max())
    raise ConvergenceError(f"stationary distribution did not converge in {max_iter} steps", residual)


def relative_pointwise_distance(q, pi) -> float:
    """max_i |q_i - pi_i| / pi_i, the walk's convergence-rate measure."""
    qa = np.asarray(q, dtype=np.float64)
    pa = np.asarray(pi, dtype=np.float64)
    if qa.shape != pa.shape:
        raise ValidationError("vector shapes differ")
    if pa.min() <= 0.0:
        raise ValidationError("stationary entries must all be positive")
    return float((np.abs(qa - pa) / pa).max())


def network_max_potential(g: Graph) -> float:
    """Ceiling of the potential metric: entropy of the stationary law."""
    n_comp, _ = connected_components(g.to_sparse(), directed=False)
    if n_comp != 1:
        raise ValidationError("network potential requires a connected graph")
    pi = stationary_distribution(transition_matrix(g, "standard"))
    return transmission_potential(pi, g.node_count)


def chain_containment_probability(p: float, m: int) -> float:
    """Probability an m-step chain never leaves its partition side.

    Evaluates the recursion f(j, m) = p * f(j+1, m) down from f(m, m) = 1 in
    exact rational arithmetic, so the result is the correctly rounded p**m.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError(f"per-step probability must be in (0,1), got {p}")
    if m < 0 or int(m) != m:
        raise ValidationError(f"chain length must be a nonnegative integer, got {m}")
    pf = Fraction(p)
    f = Fraction(1)
    for _ in range(int(m)):
        f = pf * f
    return float(f)


def full_visibility_bound(pi_a: float, eps: float, t: int) -> float:
    """Upper bound on a length-t chain staying fully inside the visible set."""
    if not 0.0 <= pi_a <= 1.0:
        raise ValidationError(f"set mass must be in [0,1], got {pi_a}")
    if not 0.0 < eps <= 1.0:
        raise ValidationError(f"eigenvalue gap must be in (0,1], got {eps}")
    if t < 0:
        raise ValidationError("chain length must be nonnegative")
    rest = 1.0 - pi_a
    return (1.0 + rest * eps / 10.0) * math.exp(-t * rest * rest * eps / 20.0)


def eigenvalue_gap(p: TransitionMatrix, tolerance: float = 1e-8, max_iter: int = 500_000) -> EigenvalueGap:
    """Gap 1 - |lambda_2| of the chain, by deflated power iteration.

    Works on the symmetrized similar matrix D^(1/2) P D^(-1/2), deflating the
    top eigenvector sqrt(pi); the magnitude estimate is deterministic for a
    fixed chain (fixed internal start vector and reduction order).
    """
    n = p.node_count
    if n < 2:
        raise ValidationError("need at least 2 nodes")
    pi = stationary_distribution(p)
    if pi.min() <= 0.0:
        raise ValidationError("chain must be irreducible (connected graph)")
    root = np.sqrt(pi)
    # S = D^(1/2) P D^(-1/2) shares P's eigenvalues and is symmetric for
    # reversible chains; its top eigenvector is sqrt(pi).
    d_half = sp.diags(root)
    d_half_inv = sp.diags(1.0 / root)
    s = (d_half @ p.matrix @ d_half_inv).tocsr()
    u1 = root / np.linalg.norm(root)
    rng = np.random.default_rng(_EIG_SEED)
    x = rng.standard_normal(n)
    x -= (x @ u1) * u1
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = s @ x
        y -= (y @ u1) * u1
        norm = np.linalg.norm(y)
        if norm == 0.0:
            # chain has a single eigenvalue: remaining spectrum is exactly 0
            return EigenvalueGap(value=1.0, lambda2=0.0, tolerance=tolerance, iterations=it)
        new_lam = norm / np.linalg.norm(x)
        x = y / norm
        if abs(new_lam - lam) <= tolerance * 0.1:
            return EigenvalueGap(value=1.0 - new_lam, lambda2=new_lam, tolerance=tolerance, iterations=it)
        lam = new_lam
    raise ConvergenceError(f"eigenvalue gap did not converge in {max_iter} iterations", abs(new_lam - lam))


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    q = p[inner]
    out[inner] = -q * np.log2(q) - (1.0 - q) * np.log2(1.0 - q)
    return out


def series_from_counts(
    counts_by_round: np.ndarray,
    n: int,
    mode: str = "distribution",
    node_hits_by_round: np.ndarray | None = None,
) -> PotentialSeries:
    """Aggregate per-trial infected counts into a potential series.

    counts_by_round is (trials, rounds+1). In "distribution" mode each trial
    contributes the entropy of the uniform law over its infected set,
    log2(count)/log2(N), and the min/mean/max are taken across trials. In
    "bernoulli" mode the series is the mean per-node binary entropy of the
    cross-trial infection frequencies (node_hits_by_round, shape
    (rounds+1, N)); a single curve, so min == mean == max.
    """
    counts = np.asarray(counts_by_round, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] < 1:
        raise ValidationError("need a (trials, rounds+1) count matrix")
    trials = counts.shape[0]
    frac = counts.mean(axis=0) / n
    if mode == "distribution":
        with np.errstate(divide="ignore"):
            per_trial = np.where(counts > 0, np.log2(np.maximum(counts, 1.0)), 0.0) / math.log2(n)
        return PotentialSeries(
            trial_count=trials,
            mode=mode,
            mean=per_trial.mean(axis=0),
            minimum=per_trial.min(axis=0),
            maximum=per_trial.max(axis=0),
            mean_infected_fraction=frac,
        )
    if mode == "bernoulli":
        if node_hits_by_round is None:
            raise ValidationError("bernoulli mode needs per-node hit counts")
        beta = np.asarray(node_hits_by_round, dtype=np.float64) / trials
        curve = _binary_entropy(beta).mean(axis=1)
        return PotentialSeries(
            trial_count=trials,
            mode=mode,
            mean=curve,
            minimum=curve.copy(),
            maximum=curve.copy(),
            mean_infected_fraction=frac,
        )
    raise ValidationError(f"unknown metric mode {mode!r}")


def potential_series(trials, n: int, rounds: int, mode: str = "distribution") -> PotentialSeries:
    """Potential series straight from TrialResult objects."""
    if not trials:
        raise ValidationError("need at least one trial")
    counts = np.vstack([tr.infected_count_by_round for tr in trials])
    node_hits = None
    if mode == "bernoulli":
        node_hits = np.zeros((rounds + 1, n), dtype=np.int64)
        for tr in trials:
            r = tr.infection_round
            valid = r >= 0
            idx = np.flatnonzero(valid)
            node_hits[r[idx], idx] += 1
        node_hits = np.cumsum(node_hits, axis=0)
    return series_from_counts(counts, n, mode=mode, node_hits_by_round=node_hits)
