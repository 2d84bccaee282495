"""Bit-level GF(2) linear algebra, GF(2^m) field arithmetic, mod-4 quadratic
forms, and a small dense Hermitian eigensolver.

Binary vectors are plain Python ints (bit u is coordinate u, u = 0..m-1);
binary symmetric matrices store one int per row.  All types are immutable
and all operations are pure, so everything here is safe to share across
worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# One machine word per vector; every construction in this package uses m <= 16.
MAX_BITS = 63

# Irreducible (in fact primitive) polynomials over GF(2), one per degree.
# Bit i is the coefficient of x^i, including the leading x^m term.  Fixing
# the table keeps field arithmetic, and hence every matrix family built on
# it, deterministic across runs.
IRREDUCIBLE_POLY = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


def _check_length(m: int) -> None:
    if not (1 <= m <= MAX_BITS):
        raise ValueError(f"vector length must be in [1, {MAX_BITS}], got {m}")


@dataclass(frozen=True)
class BinaryVector:
    """An element of F_2^m packed into one int (bit u = coordinate u)."""

    bits: int
    m: int

    def __post_init__(self):
        _check_length(self.m)
        if self.bits < 0 or self.bits >> self.m:
            raise ValueError(f"bits 0x{self.bits:x} do not fit in {self.m} positions")

    def weight(self) -> int:
        return self.bits.bit_count()

    def bit(self, u: int) -> int:
        return (self.bits >> u) & 1

    def dot(self, other: "BinaryVector") -> int:
        """Inner product over GF(2)."""
        return (self.bits & other.bits).bit_count() & 1

    def __xor__(self, other: "BinaryVector") -> "BinaryVector":
        if self.m != other.m:
            raise ValueError("length mismatch")
        return BinaryVector(self.bits ^ other.bits, self.m)


@dataclass(frozen=True)
class BinarySymmetricMatrix:
    """m x m symmetric matrix over GF(2), one int per row.

    Symmetry is enforced at construction; instances are hashable and can be
    combined with ``^`` (entrywise GF(2) addition).
    """

    rows: tuple
    m: int

    def __post_init__(self):
        _check_length(self.m)
        if len(self.rows) != self.m:
            raise ValueError("row count does not match m")
        for u, row in enumerate(self.rows):
            if row < 0 or row >> self.m:
                raise ValueError(f"row {u} does not fit in {self.m} bits")
        for u in range(self.m):
            for v in range(u + 1, self.m):
                if ((self.rows[u] >> v) & 1) != ((self.rows[v] >> u) & 1):
                    raise ValueError(f"matrix is not symmetric at ({u},{v})")

    @staticmethod
    def zero(m: int) -> "BinarySymmetricMatrix":
        return BinarySymmetricMatrix((0,) * m, m)

    @staticmethod
    def identity(m: int) -> "BinarySymmetricMatrix":
        return BinarySymmetricMatrix(tuple(1 << u for u in range(m)), m)

    @staticmethod
    def from_array(a) -> "BinarySymmetricMatrix":
        a = np.asarray(a, dtype=np.int64) & 1
        m = a.shape[0]
        rows = tuple(int(sum(int(a[u, v]) << v for v in range(m))) for u in range(m))
        return BinarySymmetricMatrix(rows, m)

    def to_array(self) -> np.ndarray:
        return np.array(
            [[(row >> v) & 1 for v in range(self.m)] for row in self.rows],
            dtype=np.int64,
        )

    def diagonal(self) -> int:
        """Main diagonal packed into one int."""
        d = 0
        for u in range(self.m):
            d |= ((self.rows[u] >> u) & 1) << u
        return d

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.rows)

    def __xor__(self, other: "BinarySymmetricMatrix") -> "BinarySymmetricMatrix":
        if self.m != other.m:
            raise ValueError("dimension mismatch")
        return BinarySymmetricMatrix(
            tuple(a ^ b for a, b in zip(self.rows, other.rows)), self.m
        )


def gf2_rank_rows(rows) -> int:
    """Rank over GF(2) of a list of int-packed row vectors."""
    basis = []
    rank = 0
    for row in rows:
        cur = int(row)
        for b in basis:
            if cur ^ b < cur:
                cur ^= b
        if cur:
            basis.append(cur)
            rank += 1
    return rank


def gf2_rank(matrix: BinarySymmetricMatrix) -> int:
    """Rank over GF(2) via bitwise Gaussian elimination."""
    return gf2_rank_rows(matrix.rows)


def z4_form_eval(matrix: BinarySymmetricMatrix, b, x) -> int:
    """Evaluate (x P x^T + 2 b x^T) mod 4 with integer-valued sums.

    ``b`` and ``x`` may be ints or BinaryVectors.  The quadratic part is the
    full double sum over 0/1 entries taken in Z before reduction, so the
    diagonal of P contributes with multiplicity 1 and off-diagonal pairs
    with multiplicity 2.
    """
    bb = b.bits if isinstance(b, BinaryVector) else int(b)
    xx = x.bits if isinstance(x, BinaryVector) else int(x)
    if bb >> matrix.m or xx >> matrix.m:
        raise ValueError("vector does not fit the matrix dimension")
    q = 0
    for u in range(matrix.m):
        if (xx >> u) & 1:
            q += (matrix.rows[u] & xx).bit_count()
    q += 2 * (bb & xx).bit_count()
    return q % 4


class GF2m:
    """GF(2^m) in the polynomial basis defined by IRREDUCIBLE_POLY[m].

    Elements are ints in [0, 2^m).  Multiplication uses exp/log tables built
    from the generator x, whose full period is verified at construction.
    """

    def __init__(self, m: int):
        if m not in IRREDUCIBLE_POLY:
            raise ValueError(f"no irreducible polynomial on file for m={m}")
        self.m = m
        self.poly = IRREDUCIBLE_POLY[m]
        self.order = (1 << m) - 1
        self._build_tables()

    def _mul_slow(self, a: int, b: int) -> int:
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a >> self.m:
                a ^= self.poly
        return r

    def _build_tables(self) -> None:
        q = 1 << self.m
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        acc = 1
        for i in range(self.order):
            exp[i] = acc
            if log[acc] != -1:
                raise ValueError(f"x is not primitive modulo 0b{self.poly:b}")
            log[acc] = i
            acc = self._mul_slow(acc, 2)
        if acc != 1:
            raise ValueError(f"0b{self.poly:b} is not irreducible")
        exp[self.order:] = exp[: self.order]
        self.exp = exp
        self.log = log
        # Trace to GF(2), tabulated.
        tr = np.zeros(q, dtype=np.int64)
        for a in range(q):
            s, t = 0, a
            for _ in range(self.m):
                s ^= t
                t = self._mul_slow(t, t)
            if s not in (0, 1):
                raise AssertionError("trace left the prime field")
            tr[a] = s
        self.tr = tr

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def mul_vec(self, a, b):
        """Elementwise product of two (broadcastable) int arrays of elements."""
        a, b = np.broadcast_arrays(
            np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        )
        out = np.zeros(a.shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        out[nz] = self.exp[self.log[a[nz]] + self.log[b[nz]]]
        return out

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self.exp[(self.log[a] * e) % self.order])

    def trace(self, a: int) -> int:
        return int(self.tr[a])


@dataclass(frozen=True)
class GF2mElement:
    """A field element tagged with its field, for the checked operations."""

    value: int
    field: GF2m

    def __post_init__(self):
        if not (0 <= self.value < (1 << self.field.m)):
            raise ValueError("value outside the field")


def gf2m_mul(a: GF2mElement, b: GF2mElement) -> GF2mElement:
    """Carry-less product reduced by the field polynomial."""
    if a.field is not b.field and (a.field.m, a.field.poly) != (b.field.m, b.field.poly):
        raise ValueError("mismatched field specs")
    return GF2mElement(a.field.mul(a.value, b.value), a.field)


def gf2m_trace(a: GF2mElement) -> int:
    """Trace to GF(2): sum of the m Frobenius conjugates."""
    return a.field.trace(a.value)


def hermitian_eigenvalues(G, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small complex Hermitian matrix, ascending.

    Cyclic Jacobi rotations; iterates until the off-diagonal Frobenius norm
    drops below ``tol`` (relative to the matrix scale).  Intended for Gram
    matrices with k <= 64.
    """
    A = np.array(G, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    n = A.shape[0]
    if n > 64:
        raise ValueError("eigensolver is restricted to k <= 64")
    scale = float(np.linalg.norm(A))
    if scale == 0.0:
        return np.zeros(n)
    if float(np.max(np.abs(A - A.conj().T))) > 1e-10 * max(1.0, scale):
        raise ValueError("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    if n == 1:
        return np.array([A[0, 0].real])

    thresh = tol * max(1.0, scale)
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.abs(A[offmask]) ** 2)))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                r = abs(apq)
                if r <= thresh / (4.0 * n * n):
                    continue
                d = apq / r
                app = A[p, p].real
                aqq = A[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * np.conj(d) * colq
                A[:, q] = s * d * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * d * rowq
                A[q, :] = s * np.conj(d) * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    else:
        raise RuntimeError("Jacobi sweep did not converge")
    return np.sort(np.diag(A).real)
