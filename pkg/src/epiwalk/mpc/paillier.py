"""Additively homomorphic encryption with jointly held decryption.

Standard construction with g = n + 1, so E(x) * E(y) mod n^2 decrypts to
x + y and E(x)^k decrypts to k*x. Decryption capability is additively
shared: a simulated trusted dealer splits the exponent d (d = 0 mod lambda,
d = 1 mod n) into per-party shares mod n*lambda, so recovering a plaintext
takes a partial decryption from every party. Key generation itself is not
distributed; the dealer shortcut is the desk-scale stand-in for it.

Randomness comes from the caller's generator so protocol runs replay
deterministically; this is simulation-grade key material, not a hardened
implementation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import gcd

import gmpy2

from ..errors import ProtocolError, ValidationError

KEY_SIZES = (1024, 2048)


@dataclass(frozen=True)
class PaillierPublicKey:
    n: int
    bits: int

    @property
    def n_sq(self) -> int:
        return self.n * self.n


@dataclass(frozen=True)
class DecryptionShare:
    party: int
    exponent: int


def _prime(bits: int, rng: random.Random) -> int:
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        p = int(gmpy2.next_prime(cand))
        if p.bit_length() == bits:
            return p


def keygen_joint(m: int, modulus_bits: int, rng: random.Random):
    """Generate a public key and m additive shares of the decryption exponent.

    All m shares are needed to decrypt; any m-1 of them are uniform values
    that reveal nothing about the exponent.
    """
    if m < 1:
        raise ValidationError(f"need at least one party, got {m}")
    if modulus_bits not in KEY_SIZES:
        raise ValidationError(f"modulus_bits must be one of {KEY_SIZES}, got {modulus_bits}")
    half = modulus_bits // 2
    while True:
        p = _prime(half, rng)
        q = _prime(half, rng)
        if p == q:
            continue
        n = p * q
        lam = (p - 1) * (q - 1) // gcd(p - 1, q - 1)
        if n.bit_length() == modulus_bits and gcd(n, lam) == 1:
            break
    mu = int(gmpy2.invert(lam, n))
    d = lam * mu  # 0 mod lambda, 1 mod n
    modulus = n * lam
    shares = []
    acc = 0
    for party in range(m - 1):
        s = rng.randrange(modulus)
        acc = (acc + s) % modulus
        shares.append(DecryptionShare(party=party, exponent=s))
    shares.append(DecryptionShare(party=m - 1, exponent=(d - acc) % modulus))
    return PaillierPublicKey(n=n, bits=modulus_bits), shares


def encrypt(pub: PaillierPublicKey, value: int, rng: random.Random) -> int:
    """E(value) = (1 + value*n) * r^n mod n^2 for a fresh unit r."""
    if not 0 <= value < pub.n:
        raise ValidationError("plaintext outside [0, n)")
    while True:
        r = rng.randrange(1, pub.n)
        if gcd(r, pub.n) == 1:
            break
    return int((1 + value * pub.n) % pub.n_sq * gmpy2.powmod(r, pub.n, pub.n_sq) % pub.n_sq)


def add_encrypted(pub: PaillierPublicKey, c1: int, c2: int) -> int:
    return c1 * c2 % pub.n_sq


def scalar_mul(pub: PaillierPublicKey, c: int, k: int) -> int:
    if k < 0:
        raise ValidationError("scalar must be nonnegative")
    return int(gmpy2.powmod(c, k, pub.n_sq))


def identity_ciphertext() -> int:
    """Unrandomized E(0); the neutral element for homomorphic sums."""
    return 1


def partial_decrypt(pub: PaillierPublicKey, share: DecryptionShare, c: int) -> int:
    return int(gmpy2.powmod(c, share.exponent, pub.n_sq))


def combine_partials(pub: PaillierPublicKey, partials) -> int:
    """Multiply all partial decryptions and strip the (1 + n)^x structure."""
    x = 1
    for part in partials:
        x = x * part % pub.n_sq
    if (x - 1) % pub.n != 0:
        raise ProtocolError("joint decryption failed: combined value malformed")
    return (x - 1) // pub.n % pub.n


def decrypt_joint(pub: PaillierPublicKey, shares, c: int) -> int:
    return combine_partials(pub, [partial_decrypt(pub, s, c) for s in shares])
