"""Random decoding matrices, rank over GF(2^e) and brute-force subset oracles.

A :class:`DecodingMatrix` is K x n: one row per source packet, one column per
received coded packet. Over GF(2) rank is computed on bit-packed rows (Python
ints, xor elimination); larger fields use table-driven elimination.

The subset oracles (:func:`zero_sum_subset_exists`,
:func:`count_minimal_zero_sum_subsets`) enumerate all 2^K row subsets and are
meant for validation at small K, not for the hot path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf import CodingDistribution, FieldSpec, sample_coefficients

MAX_ORACLE_ROWS = 25


@dataclass(frozen=True)
class DecodingMatrix:
    entries: np.ndarray
    field: FieldSpec

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.uint8, copy=True)
        if a.ndim != 2:
            raise ValueError(f"entries must be 2-D, got shape {a.shape}")
        if a.size and int(a.max()) >= self.field.q:
            raise ValueError(f"entry {int(a.max())} outside GF({self.field.q})")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def row_bits(self) -> list[int]:
        """Rows as ints, column j at bit j. GF(2) only."""
        _require_binary(self.field)
        weights = [1 << j for j in range(self.n)]
        return [sum(w for w, v in zip(weights, row) if v) for row in self.entries.tolist()]


def _require_binary(field: FieldSpec):
    if field.q != 2:
        raise ValueError(f"operation defined for GF(2) only, got GF({field.q})")


def generate_matrix(K: int, n: int, dist: CodingDistribution, rng: np.random.Generator) -> DecodingMatrix:
    if K < 1 or n < 0:
        raise ValueError(f"need K >= 1 and n >= 0, got K={K}, n={n}")
    return DecodingMatrix(sample_coefficients(dist, rng, (K, n)), dist.field)


def _rank_gf2(rows: list[int], target: int | None = None) -> int:
    # basis keyed by leading bit; each reduction strictly lowers the leading bit
    basis: dict[int, int] = {}
    remaining = len(rows)
    for v in rows:
        remaining -= 1
        while v:
            top = v.bit_length() - 1
            b = basis.get(top)
            if b is None:
                basis[top] = v
                break
            v ^= b
        if target is not None and (len(basis) >= target or len(basis) + remaining < target):
            break
    return len(basis)


def _rank_table(a: np.ndarray, field: FieldSpec, target: int | None = None) -> int:
    a = a.copy()
    rows, cols = a.shape
    mul = field.mul_table
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = mul[field.inv_table[a[r, c]], a[r]]
        below = r + 1 + np.flatnonzero(a[r + 1:, c])
        if below.size:
            a[below] ^= mul[a[below, c][:, None], a[r][None, :]]
        r += 1
        if target is not None and (r >= target or r + (cols - c - 1) < target):
            break
    return r


def rank(M: DecodingMatrix) -> int:
    if M.K == 0 or M.n == 0:
        return 0
    if M.field.q == 2:
        # eliminate over the shorter dimension; row rank == column rank
        return _rank_gf2(M.row_bits()) if M.n <= M.K else _rank_gf2(_column_bits(M))
    return _rank_table(M.entries, M.field)


def _column_bits(M: DecodingMatrix) -> list[int]:
    weights = [1 << i for i in range(M.K)]
    return [sum(w for w, v in zip(weights, col) if v) for col in M.entries.T.tolist()]


def is_full_rank(M: DecodingMatrix) -> bool:
    """True iff rank(M) == K; stops as soon as the answer is decided."""
    if M.n < M.K:
        return False
    if M.field.q == 2:
        return _rank_gf2(_column_bits(M), target=M.K) == M.K
    return _rank_table(M.entries.T, M.field, target=M.K) == M.K


class IncrementalDecoder:
    """Tracks the rank of a growing set of received coefficient columns.

    The basis is kept in echelon form keyed by pivot position, with every
    stored vector scaled so its pivot entry is 1.
    """

    def __init__(self, K: int, field: FieldSpec):
        if K < 1:
            raise ValueError(f"K must be >= 1, got {K}")
        self.K = K
        self.field = field
        self._binary = field.q == 2
        self._basis: dict[int, object] = {}

    @property
    def rank(self) -> int:
        return len(self._basis)

    @property
    def complete(self) -> bool:
        return self.rank == self.K

    def push(self, column) -> int:
        col = np.asarray(column, dtype=np.int64)
        if col.shape != (self.K,):
            raise ValueError(f"column must have length {self.K}, got shape {col.shape}")
        if self.complete:
            return self.K
        if self._binary:
            v = int(sum(1 << i for i, x in enumerate(col.tolist()) if x & 1))
            while v:
                top = v.bit_length() - 1
                b = self._basis.get(top)
                if b is None:
                    self._basis[top] = v
                    break
                v ^= b
            return self.rank
        mul = self.field.mul_table
        v = col.astype(np.uint8)
        # basis vector with pivot i is zero before i, so reduction only fills in later positions
        for i in range(self.K):
            c = v[i]
            if c == 0:
                continue
            b = self._basis.get(i)
            if b is None:
                self._basis[i] = mul[self.field.inv_table[c], v]
                break
            v = v ^ mul[c, b]
        return self.rank


def _subset_zero_flags(rows: np.ndarray, n: int) -> np.ndarray:
    """U[..., S] for every subset mask S of the K rows (rows: (..., K) GF(2) row ints).

    Built by doubling: subsets of the first i+1 rows are the subsets of the first
    i rows, then the same subsets with row i xored in. Handled 63 columns per
    word so row width is unbounded.
    """
    rows = np.asarray(rows, dtype=object)
    K = rows.shape[-1]
    batch = rows.shape[:-1]
    zero = np.ones(batch + (1 << K,), dtype=bool)
    mask63 = (1 << 63) - 1
    for shift in range(0, max(n, 1), 63):
        chunk = ((rows >> shift) & mask63).astype(np.int64)
        sums = np.zeros(batch + (1,), dtype=np.int64)
        for i in range(K):
            sums = np.concatenate([sums, sums ^ chunk[..., i:i + 1]], axis=-1)
        zero &= sums == 0
    zero[..., 0] = False
    return zero


def _minimal_flags(zero: np.ndarray, K: int) -> np.ndarray:
    """V[..., S]: S sums to zero and no proper nonempty subset does."""
    size = zero.shape[-1]
    batch = zero.shape[:-1]
    # any_sub[S] = OR of zero[T] over T subset of S (subset-sum transform)
    any_sub = zero.copy()
    for j in range(K):
        v = any_sub.reshape(batch + (size >> (j + 1), 2, 1 << j))
        v[..., 1, :] |= v[..., 0, :]
    proper = np.zeros_like(zero)
    for j in range(K):
        pv = proper.reshape(batch + (size >> (j + 1), 2, 1 << j))
        av = any_sub.reshape(batch + (size >> (j + 1), 2, 1 << j))
        pv[..., 1, :] |= av[..., 0, :]
    return zero & ~proper


def _popcounts(K: int) -> np.ndarray:
    masks = np.arange(1 << K)
    return np.array([bin(m).count("1") for m in masks.tolist()])


def _check_oracle(M: DecodingMatrix):
    _require_binary(M.field)
    if M.K > MAX_ORACLE_ROWS:
        raise ValueError(f"subset enumeration limited to K <= {MAX_ORACLE_ROWS}, got K={M.K}")


def zero_sum_subset_exists(M: DecodingMatrix) -> bool:
    """True iff some nonempty set of rows xors to the zero vector."""
    _check_oracle(M)
    return bool(_subset_zero_flags(np.array(M.row_bits(), dtype=object), M.n).any())


def zero_sum_subsets(M: DecodingMatrix) -> list[frozenset[int]]:
    """Every nonempty row subset (0-based indices) summing to zero."""
    _check_oracle(M)
    zero = _subset_zero_flags(np.array(M.row_bits(), dtype=object), M.n)
    return [frozenset(i for i in range(M.K) if s >> i & 1) for s in np.flatnonzero(zero).tolist()]


def count_minimal_zero_sum_subsets(M: DecodingMatrix) -> dict[int, int]:
    """Number of minimal zero-sum row subsets, keyed by subset size."""
    _check_oracle(M)
    counts = minimal_zero_sum_counts_batch(np.array([M.row_bits()], dtype=object), M.n)[0]
    return {size: int(c) for size, c in enumerate(counts) if c}


def minimal_zero_sum_counts_batch(rows: np.ndarray, n: int) -> np.ndarray:
    """Vectorised minimal zero-sum subset counts.

    ``rows`` has shape (batch, K) of GF(2) row ints; returns (batch, K+1)
    where column l counts minimal zero-sum subsets of size l.
    """
    rows = np.asarray(rows, dtype=object)
    K = rows.shape[-1]
    if K > MAX_ORACLE_ROWS:
        raise ValueError(f"subset enumeration limited to K <= {MAX_ORACLE_ROWS}, got K={K}")
    minimal = _minimal_flags(_subset_zero_flags(rows, n), K)
    sizes = _popcounts(K)
    out = np.zeros(rows.shape[:-1] + (K + 1,), dtype=np.int64)
    for size in range(1, K + 1):
        out[..., size] = minimal[..., sizes == size].sum(axis=-1)
    return out
