"""Arithmetic over GF(2^m) and the coding-vector linear algebra built on it.

Field elements are plain ints in [0, 2^m).  Addition in characteristic 2
is bitwise XOR for every m, so row operations vectorize as XORs on numpy
integer arrays.  Multiplication goes through log/antilog tables built from
a fixed table of reduction polynomials (one canonical polynomial per m),
which keeps coded traces bit-exact across machines.

A receiver's knowledge is a ``KnowledgeMatrix``: the set of received
combinations kept in reduced row echelon form with columns ordered
oldest-first.  Pivot columns are exactly the *seen* packets; rows that
have collapsed to a single entry are the *decoded* packets.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

# Canonical irreducible reduction polynomial per extension degree m,
# including the leading bit (e.g. 0x11B = x^8+x^4+x^3+x+1).
REDUCTION_POLYNOMIALS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0x11B,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


class SearchExhausted(RuntimeError):
    """Raised when no innovative coefficient assignment could be found."""


def clmul_reduce(a: int, b: int, m: int, poly: int) -> int:
    """Carry-less product of a and b reduced by ``poly`` (degree m).

    Slow bit-by-bit reference path; the table-driven fast path must agree
    with it exactly.
    """
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return acc


class FieldSpec:
    """GF(2^m) with the module's canonical reduction polynomial.

    Instances are cached per m via :func:`get_field`; one instance serves
    any number of matrices and packets.
    """

    def __init__(self, m: int):
        if not 1 <= m <= 16:
            raise ValueError(f"extension degree out of range: {m}")
        self.m = m
        self.poly = REDUCTION_POLYNOMIALS[m]
        self.order = 1 << m
        self.dtype = np.uint8 if m <= 8 else np.uint16
        self._build_tables()

    def _build_tables(self) -> None:
        q = self.order
        # Find a multiplicative generator; the canonical polynomial is not
        # required to be primitive (0x11B is not), so search from 2 up.
        for g in range(2, q):
            exp = [1]
            x = 1
            for _ in range(q - 2):
                x = clmul_reduce(x, g, self.m, self.poly)
                exp.append(x)
            if len(set(exp)) == q - 1:
                break
        else:  # pragma: no cover - table polynomials are all irreducible
            raise AssertionError(f"no generator found for m={self.m}")
        self.generator = g
        # Doubled exp table avoids a mod when summing two logs.
        self._exp = np.array(exp + exp, dtype=self.dtype)
        log = np.zeros(q, dtype=np.int32)
        for i, v in enumerate(exp):
            log[v] = i
        self._log = log
        if self.m <= 8:
            # Full 256x256 product table: one fancy-index per row operation.
            a = np.arange(q, dtype=np.int32)
            prod = self._exp[self._log[a][:, None] + self._log[a][None, :]]
            prod = prod.astype(self.dtype)
            prod[0, :] = 0
            prod[:, 0] = 0
            self._mul2d = prod
        else:
            self._mul2d = None

    # -- scalar ops ------------------------------------------------------

    @staticmethod
    def add(a: int, b: int) -> int:
        """Characteristic-2 addition (bitwise XOR)."""
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self._exp[int(self._log[a]) + int(self._log[b])])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self._exp[(self.order - 1) - int(self._log[a])])

    # -- vectorized row ops ----------------------------------------------

    def mul_row(self, scalar: int, row: np.ndarray) -> np.ndarray:
        """Return scalar * row as a new array."""
        if scalar == 0:
            return np.zeros_like(row)
        if scalar == 1:
            return row.copy()
        if self._mul2d is not None:
            return self._mul2d[scalar, row]
        out = self._exp[int(self._log[scalar]) + self._log[row]]
        out[row == 0] = 0
        return out

    def mul_outer(self, scalars: np.ndarray, row: np.ndarray) -> np.ndarray:
        """Return the (len(scalars), len(row)) table of scalar_i * row_j."""
        if self._mul2d is not None:
            return self._mul2d[scalars[:, None], row[None, :]]
        out = self._exp[self._log[scalars][:, None] + self._log[row][None, :]]
        out[scalars == 0, :] = 0
        out[:, row == 0] = 0
        return out


@lru_cache(maxsize=None)
def get_field(m: int) -> FieldSpec:
    """Shared FieldSpec instance for GF(2^m)."""
    return FieldSpec(m)


def default_field_bits(n_receivers: int) -> int:
    """Default extension degree: XOR coding for two receivers, GF(256) above."""
    return 1 if n_receivers <= 2 else 8


@dataclass(frozen=True)
class CodedPacket:
    """A transmitted linear combination: nonzero coefficients over a support.

    ``support`` holds global packet indices, strictly increasing
    (oldest first); ``coeffs`` are the matching nonzero field elements.
    """

    support: tuple[int, ...]
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.support) != len(self.coeffs):
            raise ValueError("support and coefficients differ in length")
        if not self.support:
            raise ValueError("empty combination")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly increasing")
        if any(c == 0 for c in self.coeffs):
            raise ValueError("zero coefficient stored")

    @property
    def is_uncoded(self) -> bool:
        return len(self.support) == 1 and self.coeffs[0] == 1

    def label(self) -> str:
        """Human-readable support, e.g. ``4+6`` for the p4/p6 mix."""
        return "+".join(str(i) for i in self.support)

    def coeffs_hex(self) -> str:
        return "+".join(f"{c:02x}" for c in self.coeffs)


def uncoded(index: int) -> CodedPacket:
    return CodedPacket((index,), (1,))


@dataclass(frozen=True)
class InsertOutcome:
    """Result of offering one combination to a KnowledgeMatrix."""

    innovative: bool
    newly_seen: frozenset[int] = dc_field(default_factory=frozenset)
    newly_decoded: frozenset[int] = dc_field(default_factory=frozenset)


class KnowledgeMatrix:
    """Received combinations in reduced row echelon form, oldest-first.

    Columns are packet indices starting at 1; pivots are chosen leftmost,
    so the pivot set is exactly the seen set.  Rows are stored densely
    (numpy) over a fixed column range that grows on demand.

    Mutating methods keep every invariant: RREF shape, pivot/row maps,
    per-column occupancy counts and the decoded set.
    """

    def __init__(self, field: FieldSpec, n_cols: int = 0):
        self.field = field
        self._width = n_cols + 1  # column 0 unused; packets are 1-based
        self._cap = 8
        self._mat = np.zeros((self._cap, self._width), dtype=field.dtype)
        self.rank = 0
        self._pivot_of_row: list[int] = []
        self._row_of_pivot: dict[int, int] = {}
        self._row_nnz: list[int] = []
        self._decoded: set[int] = set()
        # seen flags and per-column occupancy, used by request selection
        self.seen_mask = np.zeros(self._width, dtype=bool)
        self.col_nnz = np.zeros(self._width, dtype=np.int32)

    # -- bookkeeping helpers ---------------------------------------------

    def _ensure_width(self, index: int) -> None:
        if index < self._width:
            return
        new_width = max(index + 1, self._width * 2)
        grow = new_width - self._width
        self._mat = np.pad(self._mat, ((0, 0), (0, grow)))
        self.seen_mask = np.pad(self.seen_mask, (0, grow))
        self.col_nnz = np.pad(self.col_nnz, (0, grow))
        self._width = new_width

    def _ensure_capacity(self) -> None:
        if self.rank < self._cap:
            return
        self._cap *= 2
        extra = np.zeros((self._cap - self._mat.shape[0], self._width), dtype=self.field.dtype)
        self._mat = np.vstack([self._mat, extra])

    def _as_row(self, pkt: CodedPacket) -> np.ndarray:
        self._ensure_width(pkt.support[-1])
        row = np.zeros(self._width, dtype=self.field.dtype)
        row[list(pkt.support)] = self.coerce_coeffs(pkt.coeffs)
        return row

    def coerce_coeffs(self, coeffs) -> np.ndarray:
        arr = np.asarray(coeffs, dtype=np.int64)
        if (arr >= self.field.order).any():
            raise ValueError("coefficient outside the field")
        return arr.astype(self.field.dtype)

    def _reduce(self, row: np.ndarray) -> np.ndarray:
        """Eliminate every pivot column from ``row`` (read-only on self).

        RREF guarantees stored rows contain no pivot column other than
        their own, so a single pass over the incoming support suffices.
        """
        for col in np.flatnonzero(row):
            r = self._row_of_pivot.get(int(col))
            if r is not None and row[col]:
                row ^= self.field.mul_row(int(row[col]), self._mat[r, : self._width])
        return row

    # -- queries -----------------------------------------------------------

    def contains(self, pkt: CodedPacket) -> bool:
        """True if the combination already lies in the row space."""
        if pkt.support[-1] >= self._width:
            return False
        return not self._reduce(self._as_row(pkt)).any()

    def is_seen(self, index: int) -> bool:
        return index < self._width and bool(self.seen_mask[index])

    def seen_set(self) -> set[int]:
        """Pivot columns under the oldest-first ordering."""
        return set(self._row_of_pivot)

    def decoded_set(self) -> set[int]:
        """Packets whose unit vector is in the row space (unit rows)."""
        return set(self._decoded)

    @property
    def decoded_count(self) -> int:
        return len(self._decoded)

    @property
    def non_unit_count(self) -> int:
        """Number of seen-but-undecoded rows (current chain size)."""
        return self.rank - len(self._decoded)

    def row_support(self, pivot: int) -> tuple[int, ...]:
        r = self._row_of_pivot[pivot]
        return tuple(int(c) for c in np.flatnonzero(self._mat[r, : self._width]))

    def rows_as_packets(self) -> list[CodedPacket]:
        out = []
        for pivot in sorted(self._row_of_pivot):
            r = self._row_of_pivot[pivot]
            cols = np.flatnonzero(self._mat[r, : self._width])
            out.append(CodedPacket(tuple(int(c) for c in cols),
                                   tuple(int(v) for v in self._mat[r, cols])))
        return out

    def clone(self) -> "KnowledgeMatrix":
        other = KnowledgeMatrix.__new__(KnowledgeMatrix)
        other.field = self.field
        other._width = self._width
        other._cap = self._cap
        other._mat = self._mat.copy()
        other.rank = self.rank
        other._pivot_of_row = list(self._pivot_of_row)
        other._row_of_pivot = dict(self._row_of_pivot)
        other._row_nnz = list(self._row_nnz)
        other._decoded = set(self._decoded)
        other.seen_mask = self.seen_mask.copy()
        other.col_nnz = self.col_nnz.copy()
        return other

    # -- mutation ----------------------------------------------------------

    def insert(self, pkt: CodedPacket) -> InsertOutcome:
        """Offer one received combination; restore RREF.

        Non-innovative combinations (already spanned, or zero after
        reduction) leave the matrix untouched.  Otherwise the rank grows
        by exactly one, the new pivot becomes seen, and any rows that
        collapse to unit vectors become decoded.
        """
        row = self._reduce(self._as_row(pkt))
        if not row.any():
            return InsertOutcome(innovative=False)

        nz = np.flatnonzero(row)
        pivot = int(nz[0])
        lead = int(row[pivot])
        if lead != 1:
            row = self.field.mul_row(self.field.inv(lead), row)

        newly_decoded: set[int] = set()

        # Clear the new pivot column from existing rows (batched).
        col = self._mat[: self.rank, pivot]
        hit = np.flatnonzero(col)
        if hit.size:
            rows = self._mat[hit, : self._width]
            self.col_nnz[: self._width] -= (rows != 0).sum(axis=0, dtype=np.int32)
            rows ^= self.field.mul_outer(col[hit], row)
            self._mat[hit, : self._width] = rows
            self.col_nnz[: self._width] += (rows != 0).sum(axis=0, dtype=np.int32)
            counts = np.count_nonzero(rows, axis=1)
            for i, r_idx in enumerate(hit):
                n = int(counts[i])
                self._row_nnz[r_idx] = n
                p = self._pivot_of_row[r_idx]
                if n == 1 and p not in self._decoded:
                    self._decoded.add(p)
                    newly_decoded.add(p)

        self._ensure_capacity()
        self._mat[self.rank, : self._width] = row
        self._pivot_of_row.append(pivot)
        self._row_of_pivot[pivot] = self.rank
        n = int(np.count_nonzero(row))
        self._row_nnz.append(n)
        self.rank += 1
        self.seen_mask[pivot] = True
        self.col_nnz[: self._width] += (row != 0).astype(np.int32)
        if n == 1:
            self._decoded.add(pivot)
            newly_decoded.add(pivot)

        return InsertOutcome(
            innovative=True,
            newly_seen=frozenset((pivot,)),
            newly_decoded=frozenset(newly_decoded),
        )
