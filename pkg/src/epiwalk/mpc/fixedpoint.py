"""Fixed-point codec for doing real arithmetic inside Z_n.

A nonnegative real x is stored as floor(x * 2^c). Every multiplication
shifts the scale up by one c-block, so after k walk steps the vector sits at
scale 2^((k+1)c) and the modulus must satisfy 2^(kc) < n before the walk
even starts (the walk itself pre-flights the stricter (k+1)c headroom).
Per-multiplication truncation error stays below 2^(-c+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import HeadroomError, ValidationError

MAX_WALK_STEPS = 40


@dataclass(frozen=True)
class FixedPointParams:
    """Codec state: fraction bits c, step budget k, plaintext modulus n."""

    c: int
    k: int
    n: int

    def __post_init__(self):
        if self.c < 1:
            raise ValidationError(f"need at least one fraction bit, got c={self.c}")
        if not 0 <= self.k <= MAX_WALK_STEPS:
            raise ValidationError(f"step budget must be in 0..{MAX_WALK_STEPS}, got k={self.k}")
        if self.n < 4:
            raise ValidationError(f"modulus too small: {self.n}")
        if (1 << (self.k * self.c)) >= self.n:
            raise HeadroomError(
                f"2^(k*c) = 2^{self.k * self.c} is not below the modulus ({self.n.bit_length()} bits)"
            )

    def walk_headroom_ok(self, steps: int) -> bool:
        """True when a steps-long walk ends below the modulus: 2^((steps+1)c) < n."""
        return (1 << ((steps + 1) * self.c)) < self.n


def fixed_encode(x: float, c: int) -> int:
    """floor(x * 2^c) for nonnegative x."""
    if c < 1:
        raise ValidationError(f"need at least one fraction bit, got c={c}")
    if x < 0:
        raise ValidationError(f"only nonnegative values are encodable, got {x}")
    return math.floor(x * (1 << c))


def fixed_decode(v: int, scale_power: int, c: int) -> float:
    """Undo scale_power stacked encodings: v / 2^(scale_power * c)."""
    if scale_power < 0:
        raise ValidationError("scale power must be nonnegative")
    return v / (1 << (scale_power * c))


def reciprocal_fixed(d: int, c: int) -> int:
    """floor(2^c / d), the exact encoding of a transition weight 1/d."""
    if d < 1:
        raise ValidationError(f"degree must be positive, got {d}")
    return (1 << c) // d
