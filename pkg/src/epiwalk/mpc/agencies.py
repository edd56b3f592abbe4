"""Multi-agency graph assembly and the encrypted distributed walk.

Agencies are in-process actors; the orchestrating functions below move
messages between them in a fixed order and log them to a Transcript. The
flow mirrors a real deployment: private set intersection finds shared
individuals, labels are assigned range by range, duplicate edges are dropped
by the lowest-id owner, node degrees are summed with an information-
theoretic share protocol, and the walk itself runs over an encrypted state
vector that only a joint decryption can open.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from ..errors import HeadroomError, ProtocolError, ValidationError
from . import paillier
from .fixedpoint import MAX_WALK_STEPS, FixedPointParams, fixed_decode, fixed_encode, reciprocal_fixed
from .psi import psi
from .transcript import Transcript

__all__ = [
    "AgencyShare",
    "LabelSpace",
    "WalkResult",
    "assign_labels",
    "dedup_edges",
    "shared_degree_sum",
    "joint_degrees",
    "distributed_walk",
    "plaintext_fixed_walk",
]


@dataclass(eq=False)
class AgencyShare:
    """One agency's slice of the joint graph, in raw individual ids."""

    agency_id: int
    nodes: set
    edges: set  # canonical (min, max) raw-id pairs
    labels: dict = field(default_factory=dict)  # raw id -> label, local knowledge

    @property
    def name(self) -> str:
        return f"agency{self.agency_id}"

    def labeled_edges(self) -> set:
        out = set()
        for u, v in self.edges:
            lu, lv = self.labels[u], self.labels[v]
            out.add((min(lu, lv), max(lu, lv)))
        return out


@dataclass(eq=False)
class LabelSpace:
    """The joint pseudonym map: bijective over the union of all nodes."""

    total: int
    assignments: dict  # raw id -> label (audit view)


@dataclass(eq=False)
class WalkResult:
    values: np.ndarray      # decoded probabilities per label
    integers: list          # raw fixed-point integers after joint decryption
    scale_power: int        # decoded by dividing with 2^(scale_power * c)
    error_bound: float      # declared float-drift bound


def pairwise_intersections(agencies, rng: random.Random, transcript: Transcript | None = None) -> dict:
    """PSI over every agency pair; both sides learn only the shared ids."""
    out = {}
    for i in range(len(agencies)):
        for j in range(i + 1, len(agencies)):
            out[(i, j)] = psi(
                agencies[i].nodes,
                agencies[j].nodes,
                rng,
                transcript=transcript,
                names=(agencies[i].name, agencies[j].name),
            )
    return out


def assign_labels(agencies, rng: random.Random, intersections: dict | None = None,
                  transcript: Transcript | None = None) -> LabelSpace:
    """Sequential anonymous labeling.

    Agency 0 labels its own nodes with a random permutation of its range and
    forwards intersection labels; every later agency labels whatever of its
    nodes is still unlabeled in the next contiguous range. Afterwards each
    agency knows labels exactly for its own nodes.
    """
    if not agencies:
        raise ValidationError("need at least one agency")
    if intersections is None:
        intersections = pairwise_intersections(agencies, rng, transcript)
    assignments: dict = {}
    offset = 0
    for idx, agency in enumerate(agencies):
        fresh = sorted(v for v in agency.nodes if v not in agency.labels)
        order = list(range(len(fresh)))
        rng.shuffle(order)
        for pos, v in zip(order, fresh):
            label = offset + pos
            agency.labels[v] = label
        offset += len(fresh)
        for v in agency.nodes:
            label = agency.labels[v]
            if v in assignments and assignments[v] != label:
                raise ProtocolError(f"label collision on individual {v!r}")
            assignments[v] = label
        # forward labels of shared individuals to every later agency
        if transcript is not None:
            transcript.next_round()
        for later in range(idx + 1, len(agencies)):
            key = (min(idx, later), max(idx, later))
            shared = intersections.get(key, set())
            news = {v: agency.labels[v] for v in shared if v in agency.labels}
            relevant = {v: l for v, l in news.items() if v not in agencies[later].labels}
            agencies[later].labels.update(relevant)
            if transcript is not None and relevant:
                payload = b"|".join(b"%d" % l for l in sorted(relevant.values()))
                transcript.log(agency.name, agencies[later].name, "label-forward", payload)
    if len(set(assignments.values())) != len(assignments):
        raise ProtocolError("label space is not bijective")
    return LabelSpace(total=len(assignments), assignments=assignments)


def dedup_edges(agencies, rng: random.Random, transcript: Transcript | None = None):
    """Drop duplicate edges: the lower-id agency keeps each shared edge.

    Shared edges are discovered with the same blinded-intersection protocol
    used for the vertex sets, run over canonical edge encodings.
    """
    for i in range(len(agencies)):
        for j in range(i + 1, len(agencies)):
            a, b = agencies[i], agencies[j]
            if not a.edges or not b.edges:
                continue
            shared = psi(a.edges, b.edges, rng, transcript=transcript, names=(a.name, b.name))
            b.edges -= shared
    return agencies


def shared_degree_sum(local_degrees, l: int, rng: random.Random,
                      transcript: Transcript | None = None) -> int:
    """Sum per-agency degrees without revealing any addend.

    Each agency splits its value into m uniform shares mod l, one per
    agency; everyone sums the shares they received and broadcasts that, and
    the broadcast total is the degree. Requires l > the true total.
    """
    m = len(local_degrees)
    if m < 2:
        raise ValidationError("degree aggregation needs at least two agencies")
    if l < 2:
        raise ValidationError(f"share modulus must be at least 2, got {l}")
    shares = [[0] * m for _ in range(m)]
    for i, value in enumerate(local_degrees):
        acc = 0
        for j in range(m - 1):
            s = rng.randrange(l)
            shares[i][j] = s
            acc = (acc + s) % l
        shares[i][m - 1] = (int(value) - acc) % l
    if transcript is not None:
        transcript.next_round()
        for i in range(m):
            for j in range(m):
                if i != j:
                    transcript.log(f"agency{i}", f"agency{j}", "degree-share", b"%d" % shares[i][j])
    received = [sum(shares[i][j] for i in range(m)) % l for j in range(m)]
    if transcript is not None:
        transcript.next_round()
        for j in range(m):
            transcript.log(f"agency{j}", "all", "degree-share-sum", b"%d" % received[j])
    return sum(received) % l


def joint_degrees(agencies, total_labels: int, l: int, rng: random.Random,
                  transcript: Transcript | None = None) -> np.ndarray:
    """Per-label joint degree over the deduplicated edge sets."""
    m = len(agencies)
    local = np.zeros((m, total_labels), dtype=np.int64)
    for i, agency in enumerate(agencies):
        for lu, lv in agency.labeled_edges():
            local[i, lu] += 1
            local[i, lv] += 1
    degrees = np.zeros(total_labels, dtype=np.int64)
    if m == 1:
        degrees[:] = local[0]
        return degrees
    for label in range(total_labels):
        degrees[label] = shared_degree_sum(local[:, label].tolist(), l, rng, transcript)
    return degrees


def _directed_rows(agency: AgencyShare):
    """Both directions of each owned undirected edge, in label space."""
    for lu, lv in sorted(agency.labeled_edges()):
        yield lu, lv
        yield lv, lu


def plaintext_fixed_walk(agencies, v0, k: int, c: int, n_mod: int, degrees) -> list:
    """The integer twin of the encrypted walk: same weights, same order,
    same modulus. Used as the bit-exactness oracle."""
    total = len(v0)
    vec = [fixed_encode(float(x), c) for x in v0]
    weights = [reciprocal_fixed(int(d), c) if d > 0 else 0 for d in degrees]
    for _ in range(k):
        nxt = [0] * total
        for agency in agencies:
            for src, dst in _directed_rows(agency):
                nxt[dst] = (nxt[dst] + weights[src] * vec[src]) % n_mod
        vec = nxt
    return vec


def distributed_walk(agencies, v0, k: int, params: FixedPointParams,
                     pub: paillier.PaillierPublicKey, key_shares, degrees,
                     rng: random.Random, transcript: Transcript | None = None) -> WalkResult:
    """k steps of the joint walk over an encrypted state vector.

    Agency 0 encrypts the start vector; each step, every agency folds its
    own transition rows into an encrypted partial, the partials are summed
    homomorphically, and only the final vector is jointly decrypted. The
    decrypted integers are bit-identical to plaintext_fixed_walk by
    construction, and the declared error bound covers the drift against an
    exact floating-point walk.
    """
    total = len(v0)
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.min() < 0.0:
        raise ValidationError("initial viral-load vector must be nonnegative")
    if abs(v0.sum() - 1.0) > 1e-9:
        raise ValidationError("initial viral-load vector must sum to 1")
    if not 0 <= k <= MAX_WALK_STEPS:
        raise ValidationError(f"walk length must be in 0..{MAX_WALK_STEPS}, got {k}")
    if params.n != pub.n:
        raise ProtocolError("fixed-point modulus does not match the public key")
    if not params.walk_headroom_ok(k):
        raise HeadroomError(
            f"walk of {k} steps at c={params.c} needs 2^{(k + 1) * params.c} < n "
            f"({params.n.bit_length()} bits); rejected pre-flight"
        )
    degrees = np.asarray(degrees, dtype=np.int64)
    weights = [reciprocal_fixed(int(d), params.c) if d > 0 else 0 for d in degrees]

    enc = [paillier.encrypt(pub, fixed_encode(float(x), params.c), rng) for x in v0]
    if transcript is not None:
        transcript.next_round()
        transcript.log("agency0", "all", "encrypted-vector", b"%d" % len(enc))

    for _ in range(k):
        if transcript is not None:
            transcript.next_round()
        partials = []
        for agency in agencies:
            part = [paillier.identity_ciphertext()] * total
            for src, dst in _directed_rows(agency):
                term = paillier.scalar_mul(pub, enc[src], weights[src])
                part[dst] = paillier.add_encrypted(pub, part[dst], term)
            partials.append(part)
            if transcript is not None:
                transcript.log(agency.name, "all", "matvec-partial", b"%d" % total)
        enc = [
            _fold(pub, [p[slot] for p in partials])
            for slot in range(total)
        ]

    ints = []
    for slot in range(total):
        parts = [paillier.partial_decrypt(pub, share, enc[slot]) for share in key_shares]
        if transcript is not None:
            transcript.log("all", "all", "partial-decryption", b"%d" % len(parts))
        ints.append(paillier.combine_partials(pub, parts))
    scale_power = k + 1
    values = np.array([fixed_decode(v, scale_power, params.c) for v in ints])
    max_deg = int(degrees.max()) if degrees.size else 0
    bound = k * max_deg * 2.0 ** (-params.c + 1)
    return WalkResult(values=values, integers=ints, scale_power=scale_power, error_bound=bound)


def _fold(pub, ciphertexts):
    acc = paillier.identity_ciphertext()
    for c in ciphertexts:
        acc = paillier.add_encrypted(pub, acc, c)
    return acc
