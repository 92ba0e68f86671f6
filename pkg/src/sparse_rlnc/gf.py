"""Arithmetic over binary extension fields GF(2^e) and sparse coefficient sampling.

Elements are plain integers in ``0..q-1``. Addition is xor; multiplication
goes through log/antilog tables built from a fixed primitive polynomial per
degree (listed in :data:`REDUCTION_POLYNOMIALS`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DEGREE = 8

# Bit-encoded primitive polynomials, bit i is the coefficient of x^i.
REDUCTION_POLYNOMIALS = {
    1: 0b11,  # x + 1
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1000011,  # x^6 + x + 1
    7: 0b10000011,  # x^7 + x + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
}


def _poly_mod(a: int, b: int) -> int:
    """Remainder of a divided by b in GF(2)[x]."""
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for divisor in range(1 << d, 1 << (d + 1)):
            if _poly_mod(poly, divisor) == 0:
                return False
    return True


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^e) with precomputed tables.

    ``exp`` has length ``2*(q-1)`` so ``exp[log[a] + log[b]]`` never needs a
    modulo. ``mul_table`` is the full q x q product table (64 KiB at e=8),
    used by the vectorised elimination routines.
    """

    extension_degree: int
    reduction_polynomial: int
    exp: np.ndarray = field(repr=False, compare=False)
    log: np.ndarray = field(repr=False, compare=False)
    inv_table: np.ndarray = field(repr=False, compare=False)
    mul_table: np.ndarray = field(repr=False, compare=False)

    @property
    def q(self) -> int:
        return 1 << self.extension_degree

    def add(self, a: int, b: int) -> int:
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        if self.extension_degree == 1:
            return a & b
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def __contains__(self, a: object) -> bool:
        return isinstance(a, (int, np.integer)) and 0 <= a < self.q


def field_new(extension_degree: int) -> FieldSpec:
    """Build GF(2^extension_degree) for 1 <= extension_degree <= 8."""
    e = int(extension_degree)
    if not 1 <= e <= MAX_DEGREE:
        raise ValueError(f"extension degree must be in [1, {MAX_DEGREE}], got {extension_degree}")
    poly = REDUCTION_POLYNOMIALS[e]
    if not is_irreducible(poly):  # pragma: no cover - table is fixed
        raise ValueError(f"reduction polynomial {poly:#x} is reducible")
    q = 1 << e
    order = q - 1
    exp = np.zeros(2 * order, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    x = 1
    for i in range(order):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & q:
            x ^= poly
    exp[order:] = exp[:order]
    if e > 1 and len(set(exp[:order].tolist())) != order:  # pragma: no cover
        raise ValueError(f"x does not generate GF({q})^* under {poly:#x}")

    inv_table = np.zeros(q, dtype=np.uint8)
    for a in range(1, q):
        inv_table[a] = exp[(order - log[a]) % order]
    mul_table = np.zeros((q, q), dtype=np.uint8)
    nz = np.arange(1, q)
    mul_table[1:, 1:] = exp[log[nz][:, None] + log[nz][None, :]]
    return FieldSpec(e, poly, _frozen(exp), _frozen(log), _frozen(inv_table), _frozen(mul_table))


@dataclass(frozen=True)
class CodingDistribution:
    """Coefficient law: 0 with probability p, otherwise uniform on the q-1 nonzero elements."""

    field: FieldSpec
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @classmethod
    def classic(cls, field: FieldSpec) -> "CodingDistribution":
        return cls(field, 1.0 / field.q)

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def is_classic(self) -> bool:
        return bool(np.isclose(self.p, 1.0 / self.q, rtol=0.0, atol=1e-12))

    @property
    def is_sparse(self) -> bool:
        return self.p > 1.0 / self.q and not self.is_classic

    def pmf(self) -> np.ndarray:
        out = np.full(self.q, (1.0 - self.p) / (self.q - 1))
        out[0] = self.p
        return out


def sample_coefficients(dist: CodingDistribution, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw iid coefficients; returns a uint8 array of the given shape."""
    zero = rng.random(size) < dist.p
    if dist.q == 2:
        values = np.ones(np.shape(zero), dtype=np.uint8)
    else:
        values = rng.integers(1, dist.q, size=np.shape(zero), dtype=np.uint8)
    return np.where(zero, np.uint8(0), values).astype(np.uint8)


def sample_coefficient(dist: CodingDistribution, rng: np.random.Generator) -> int:
    return int(sample_coefficients(dist, rng, ()))
