"""Exact arithmetic and dense linear algebra over a prime field GF(q).

Matrices are plain ``numpy`` int64 arrays holding canonical representatives
in ``[0, q)``.  The modulus is capped below ``2**31`` so that the product of
two canonical entries always fits in a signed 64-bit intermediate.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from sympy import isprime

from ._kernels import nonsingular_many, right_null_many, rref_inplace

MERSENNE31 = 2**31 - 1

_LIMB = 16
_LIMB_MASK = (1 << _LIMB) - 1
# a @ (b & mask) accumulates terms < 2**47; keep the inner dimension below 2**15
_CHUNK = 1 << 15


@functools.lru_cache(maxsize=256)
def _isprime(q: int) -> bool:
    return bool(isprime(q))


class DivisionByZero(ZeroDivisionError):
    """Inversion of the zero element."""


class SingularMatrix(ValueError):
    """A square matrix without an inverse over GF(q)."""


@dataclass(frozen=True)
class RrefResult:
    rref: np.ndarray
    rank: int
    pivots: tuple[int, ...]


@dataclass(frozen=True)
class PrimeField:
    """Context object for GF(q); every linear-algebra routine hangs off it."""

    q: int = MERSENNE31

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or self.q < 2:
            raise ValueError(f"modulus must be an integer >= 2, got {self.q!r}")
        if self.q >= 2**31:
            raise ValueError("modulus must be below 2**31 for int64 arithmetic")
        if not _isprime(int(self.q)):
            raise ValueError(f"modulus {self.q} is not prime")

    # scalar arithmetic -------------------------------------------------

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        a = int(a) % self.q
        if a == 0:
            raise DivisionByZero(f"0 has no inverse in GF({self.q})")
        return pow(a, self.q - 2, self.q)

    # arrays ------------------------------------------------------------

    def array(self, x) -> np.ndarray:
        """Canonical int64 copy of ``x`` (accepts negative or big ints)."""
        arr = np.asarray(x)
        if arr.dtype == object or arr.dtype.kind not in "iub":
            arr = np.vectorize(lambda v: int(v) % self.q, otypes=[np.int64])(arr)
            return arr.astype(np.int64)
        return np.mod(arr.astype(np.int64), self.q)

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        return np.zeros((rows, cols), dtype=np.int64)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.int64)

    def random(self, rng: np.random.Generator, shape, nonzero: bool = False) -> np.ndarray:
        low = 1 if nonzero else 0
        return rng.integers(low, self.q, size=shape, dtype=np.int64)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape[-1] == 0:
            shape = a.shape[:-1] + b.shape[1:]
            return np.zeros(shape, dtype=np.int64)
        out = None
        for start in range(0, a.shape[-1], _CHUNK):
            ac = a[..., start:start + _CHUNK]
            bc = b[start:start + _CHUNK]
            lo = (ac @ (bc & _LIMB_MASK)) % self.q
            hi = (ac @ (bc >> _LIMB)) % self.q
            part = (hi * (1 << _LIMB) + lo) % self.q
            out = part if out is None else (out + part) % self.q
        return out

    # elimination -------------------------------------------------------

    def rref(self, m) -> RrefResult:
        """Reduced row echelon form; pivots are 0-based column indices."""
        a = self.array(m).copy()
        if a.ndim != 2:
            raise ValueError("rref expects a 2-D matrix")
        if a.size == 0:
            return RrefResult(a, 0, ())
        rank, pivots = rref_inplace(a, self.q)
        return RrefResult(a, int(rank), tuple(pivots[:rank].tolist()))

    def rank(self, m) -> int:
        m = np.asarray(m)
        if m.size == 0:
            return 0
        return self.rref(m).rank

    def right_null_basis(self, m) -> np.ndarray:
        """Rows ``x`` with ``m @ x.T == 0``, in RREF free-variable order."""
        m = self.array(m)
        rows, cols = m.shape
        if rows == 0:
            return self.eye(cols)
        res = self.rref(m)
        pivset = set(res.pivots)
        free = [c for c in range(cols) if c not in pivset]
        basis = np.zeros((len(free), cols), dtype=np.int64)
        basis[np.arange(len(free)), free] = 1
        if res.rank and free:
            basis[:, list(res.pivots)] = (-res.rref[: res.rank][:, free].T) % self.q
        return basis

    def left_null_basis(self, m) -> np.ndarray:
        """Rows ``s`` with ``s @ m == 0``."""
        m = self.array(m)
        return self.right_null_basis(m.T)

    def invert(self, m) -> np.ndarray:
        m = self.array(m)
        n, k = m.shape
        if n != k:
            raise SingularMatrix(f"non-square matrix {m.shape}")
        res = self.rref(np.hstack([m, self.eye(n)]))
        if res.rank < n or res.pivots[n - 1] != n - 1:
            raise SingularMatrix("matrix is singular over GF(%d)" % self.q)
        return res.rref[:, n:].copy()

    def solve(self, a, b) -> np.ndarray:
        """Solve ``a @ x == b`` for square nonsingular ``a``."""
        return self.matmul(self.invert(a), self.array(b))

    # batched helpers ---------------------------------------------------

    def nonsingular_batch(self, mats: np.ndarray) -> np.ndarray:
        """Boolean mask of which square matrices in a (B, n, n) stack are invertible."""
        a = np.array(mats, dtype=np.int64, order="C")
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError("expected a stack of square matrices")
        if a.size and (a.min() < 0 or a.max() >= self.q):
            a %= self.q
        return nonsingular_many(a, self.q)

    def right_null_batch(self, mats: np.ndarray):
        """Null bases of a (B, m, n) stack of full-row-rank matrices, plus rank flags."""
        a = np.array(mats, dtype=np.int64, order="C")
        if a.ndim != 3:
            raise ValueError("expected a stack of matrices")
        if a.size and (a.min() < 0 or a.max() >= self.q):
            a %= self.q
        if a.shape[1] > a.shape[2]:
            return np.zeros((a.shape[0], 0, a.shape[2]), dtype=np.int64), np.zeros(a.shape[0], dtype=bool)
        return right_null_many(a, self.q)

    def is_zero(self, m) -> bool:
        return not np.any(np.asarray(m) % self.q)
