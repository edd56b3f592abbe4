"""Private set intersection by commutative blinding.

Both parties hash their elements into the quadratic-residue subgroup of a
fixed 256-bit safe-prime group and exponentiate with secret scalars.
Because (H(x)^a)^b == (H(x)^b)^a, the doubly blinded values of common
elements collide while everything else stays an opaque group element; each
party learns exactly the intersection. Semi-honest parties only; cost is
linear in |A| + |B|.
"""

from __future__ import annotations

import hashlib
import random

import gmpy2

from ..errors import ProtocolError

# safe prime p = 2q + 1; blinding exponents live in Z_q
GROUP_PRIME = 0xB3D4B0D0810ED978AEE96FC77837576F7A3FD496ED5DE1A01E5984460AE3AA6B
GROUP_ORDER = (GROUP_PRIME - 1) // 2


def _canonical_bytes(element) -> bytes:
    if isinstance(element, bytes):
        return element
    if isinstance(element, str):
        return element.encode("utf-8")
    if isinstance(element, int):
        return b"i%d" % element
    if isinstance(element, tuple):
        return b"t" + b",".join(_canonical_bytes(e) for e in element)
    raise ProtocolError(f"cannot hash element of type {type(element).__name__}")


def hash_to_group(element) -> int:
    """Map an element into the prime-order subgroup (hash then square)."""
    data = _canonical_bytes(element)
    counter = 0
    while True:
        h = int.from_bytes(hashlib.sha256(data + b"#%d" % counter).digest(), "big") % GROUP_PRIME
        g = h * h % GROUP_PRIME
        if g > 1:
            return g
        counter += 1


def _ser(values) -> bytes:
    return b"|".join(v.to_bytes(32, "big") for v in values)


def psi(set_a, set_b, rng: random.Random, transcript=None, names=("A", "B")) -> set:
    """Intersection of two id sets; both parties end up knowing exactly it."""
    a_name, b_name = names
    elems_a = sorted(set_a, key=_canonical_bytes)
    elems_b = sorted(set_b, key=_canonical_bytes)
    exp_a = rng.randrange(2, GROUP_ORDER)
    exp_b = rng.randrange(2, GROUP_ORDER)

    # A -> B: singly blinded A elements (A shuffles, remembers the order)
    blinded_a = [int(gmpy2.powmod(hash_to_group(x), exp_a, GROUP_PRIME)) for x in elems_a]
    perm = list(range(len(blinded_a)))
    rng.shuffle(perm)
    sent_a = [blinded_a[i] for i in perm]
    if transcript is not None:
        transcript.next_round()
        transcript.log(a_name, b_name, "psi-blinded-set", _ser(sent_a))

    # B -> A: doubly blinded A values (order preserved) plus B's own blinds
    double_a = [int(gmpy2.powmod(v, exp_b, GROUP_PRIME)) for v in sent_a]
    blinded_b = [int(gmpy2.powmod(hash_to_group(y), exp_b, GROUP_PRIME)) for y in elems_b]
    perm_b = list(range(len(blinded_b)))
    rng.shuffle(perm_b)
    sent_b = [blinded_b[i] for i in perm_b]
    if transcript is not None:
        transcript.next_round()
        transcript.log(b_name, a_name, "psi-double-blinded", _ser(double_a))
        transcript.log(b_name, a_name, "psi-blinded-set", _ser(sent_b))

    # A -> B: doubly blinded B values (order preserved)
    double_b = [int(gmpy2.powmod(v, exp_a, GROUP_PRIME)) for v in sent_b]
    if transcript is not None:
        transcript.next_round()
        transcript.log(a_name, b_name, "psi-double-blinded", _ser(double_b))

    # A matches its own double blinds against B's returned set
    double_b_set = set(double_b)
    result_a = set()
    for send_pos, val in enumerate(double_a):
        if val in double_b_set:
            result_a.add(elems_a[perm[send_pos]])
    # B does the symmetric match
    double_a_set = set(double_a)
    result_b = set()
    for send_pos, val in enumerate(double_b):
        if val in double_a_set:
            result_b.add(elems_b[perm_b[send_pos]])
    if result_a != result_b:
        raise ProtocolError("psi outcome mismatch between parties")
    return result_a
