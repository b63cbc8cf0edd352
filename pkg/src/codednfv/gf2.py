"""Exact GF(2) linear algebra on packed bit words.

Vectors and matrices store their bits in plain Python ints (bit ``i`` of a
vector word is element ``i``; bit ``j`` of a matrix row is column ``j``), so
XOR, rank and solving are exact integer operations with no tolerance concept.
Everything here is immutable and safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class LengthMismatch(ValueError):
    """Operands have incompatible bit lengths."""


class RankDeficient(ValueError):
    """A linear system has no unique solution because the matrix rank is too low."""


class InconsistentSystem(ValueError):
    """An overdetermined linear system has contradictory equations."""


class TooLarge(ValueError):
    """The requested exhaustive enumeration exceeds its size budget."""


class ZeroMatrix(ValueError):
    """Every codeword of the matrix is zero, so minimum distance is undefined."""


# Exhaustive codeword enumeration is 2^rows; anything past this is refused.
MAX_ENUM_ROWS = 20


@dataclass(frozen=True)
class BitVec:
    """Immutable GF(2) vector: bit ``i`` of ``word`` is element ``i``."""

    word: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"negative length {self.n}")
        if not 0 <= self.word < (1 << self.n):
            raise ValueError(f"word has bits outside length {self.n}")

    @classmethod
    def zeros(cls, n: int) -> BitVec:
        return cls(0, n)

    @classmethod
    def ones(cls, n: int) -> BitVec:
        return cls((1 << n) - 1, n)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitVec:
        word = 0
        n = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit value {b!r} is not 0 or 1")
            word |= b << n
            n += 1
        return cls(word, n)

    @classmethod
    def from01(cls, text: str) -> BitVec:
        """Parse a '0'/'1' string, first character = element 0."""
        return cls.from_bits(int(c) for c in text.strip())

    @classmethod
    def from_array(cls, arr: np.ndarray) -> BitVec:
        return cls.from_bits(int(b) for b in np.asarray(arr).ravel())

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.n
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.word >> i) & 1

    def __iter__(self) -> Iterator[int]:
        return ((self.word >> i) & 1 for i in range(self.n))

    def __xor__(self, other: BitVec) -> BitVec:
        if not isinstance(other, BitVec):
            return NotImplemented
        if self.n != other.n:
            raise LengthMismatch(f"xor of lengths {self.n} and {other.n}")
        return BitVec(self.word ^ other.word, self.n)

    def weight(self) -> int:
        return self.word.bit_count()

    def to01(self) -> str:
        return "".join(str((self.word >> i) & 1) for i in range(self.n))

    def to_array(self) -> np.ndarray:
        return np.fromiter(self, dtype=np.uint8, count=self.n)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"BitVec({self.to01()!r})"


def xor(a: BitVec, b: BitVec) -> BitVec:
    """Elementwise XOR of two equal-length vectors."""
    return a ^ b


@dataclass(frozen=True)
class BitMatrix:
    """Immutable GF(2) matrix: ``rows[i]`` is a bitmask, bit ``j`` = column ``j``."""

    rows: tuple[int, ...]
    cols: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        if self.cols < 0:
            raise ValueError(f"negative column count {self.cols}")
        for r in self.rows:
            if not 0 <= r < (1 << self.cols):
                raise ValueError(f"row has bits outside {self.cols} columns")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> BitMatrix:
        cols = len(rows[0]) if rows else 0
        words = []
        for row in rows:
            if len(row) != cols:
                raise LengthMismatch("ragged rows")
            words.append(sum((int(b) & 1) << j for j, b in enumerate(row)))
        return cls(tuple(words), cols)

    @classmethod
    def from01(cls, text: str) -> BitMatrix:
        """Parse rows of '0'/'1' characters separated by newlines or '/'."""
        lines = [ln.strip() for ln in text.replace("/", "\n").splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty matrix text")
        return cls.from_rows([[int(c) for c in ln] for ln in lines])

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(tuple(1 << j for j in range(n)), n)

    @classmethod
    def from_columns(cls, columns: Sequence[int], n_rows: int) -> BitMatrix:
        """Build from column bitmasks (bit ``i`` of a column = row ``i``)."""
        rows = [0] * n_rows
        for j, col in enumerate(columns):
            if not 0 <= col < (1 << n_rows):
                raise ValueError(f"column has bits outside {n_rows} rows")
            for i in range(n_rows):
                if (col >> i) & 1:
                    rows[i] |= 1 << j
        return cls(tuple(rows), len(columns))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return self.cols

    def entry(self, i: int, j: int) -> int:
        if not (0 <= i < self.n_rows and 0 <= j < self.cols):
            raise IndexError((i, j))
        return (self.rows[i] >> j) & 1

    def column_word(self, j: int) -> int:
        """Column ``j`` as a bitmask over rows."""
        if not 0 <= j < self.cols:
            raise IndexError(j)
        return sum(((r >> j) & 1) << i for i, r in enumerate(self.rows))

    def columns(self) -> tuple[int, ...]:
        return tuple(self.column_word(j) for j in range(self.cols))

    def column_weight(self, j: int) -> int:
        return self.column_word(j).bit_count()

    def row_vec(self, i: int) -> BitVec:
        return BitVec(self.rows[i], self.cols)

    def submatrix_cols(self, keep: Sequence[int]) -> BitMatrix:
        """Restriction to the given columns, in the given order."""
        return BitMatrix.from_columns([self.column_word(j) for j in keep], self.n_rows)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.cols):
                out[i, j] = (r >> j) & 1
        return out

    def to01(self, sep: str = "\n") -> str:
        return sep.join(
            "".join(str((r >> j) & 1) for j in range(self.cols)) for r in self.rows
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"BitMatrix({self.to01('/')!r})"


def rank(m: BitMatrix) -> int:
    """GF(2) rank via Gaussian elimination on row bitmasks."""
    return rank_words(list(m.rows))


def rank_words(work: list[int]) -> int:
    """Rank of row bitmasks; eliminates in place, pass a copy to keep rows."""
    r = 0
    for bit in range(max(w.bit_length() for w in work) if work else 0):
        mask = 1 << bit
        pivot = next((i for i in range(r, len(work)) if work[i] & mask), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        for i in range(len(work)):
            if i != r and work[i] & mask:
                work[i] ^= work[r]
        r += 1
        if r == len(work):
            break
    return r


def solve(m: BitMatrix, rhs: Sequence[BitVec]) -> tuple[BitVec, ...]:
    """Solve ``u . m == rhs`` for the K unknown row vectors ``u``.

    ``m`` is K x N and ``rhs`` holds one vector per column of ``m``; column j
    contributes the equation ``XOR_i m[i,j] * u_i == rhs[j]``.  All bit
    positions of the rhs vectors are solved in one elimination pass by
    carrying each equation's rhs as a packed word.

    Raises RankDeficient when the columns do not determine ``u`` uniquely and
    InconsistentSystem when redundant equations contradict each other (which
    can only happen if some rhs entry is corrupt).
    """
    k = m.n_rows
    if len(rhs) != m.n_cols:
        raise LengthMismatch(f"{m.n_cols} columns but {len(rhs)} rhs vectors")
    if not rhs:
        raise RankDeficient("empty system")
    nbits = rhs[0].n
    if any(v.n != nbits for v in rhs):
        raise LengthMismatch("rhs vectors differ in length")

    # pivots[b] = (coef, word): a reduced equation whose coefficient mask has
    # bit b as its unique pivot.
    pivots: dict[int, tuple[int, int]] = {}
    for j in range(m.n_cols):
        coef = m.column_word(j)
        word = rhs[j].word
        for b, (pc, pw) in pivots.items():
            if (coef >> b) & 1:
                coef ^= pc
                word ^= pw
        if coef:
            b = (coef & -coef).bit_length() - 1
            for b2, (c2, w2) in list(pivots.items()):
                if (c2 >> b) & 1:
                    pivots[b2] = (c2 ^ coef, w2 ^ word)
            pivots[b] = (coef, word)
        elif word:
            raise InconsistentSystem(f"column {j} contradicts earlier equations")
    if len(pivots) < k:
        raise RankDeficient(f"rank {len(pivots)} < {k} rows")
    return tuple(BitVec(pivots[i][1], nbits) for i in range(k))


def min_distance(m: BitMatrix) -> int:
    """Minimum Hamming weight over all nonzero codewords ``u . m``.

    Enumerates the 2^K - 1 nonzero messages in Gray-code order so that each
    codeword is one XOR away from the previous one.
    """
    d, _ = _min_weight_scan(m)
    return d


def min_weight_codeword(m: BitMatrix) -> tuple[int, BitVec]:
    """A minimum-weight nonzero codeword along with its weight."""
    d, cw = _min_weight_scan(m)
    return d, BitVec(cw, m.cols)


def _min_weight_scan(m: BitMatrix) -> tuple[int, int]:
    k = m.n_rows
    if k == 0 or not any(m.rows):
        raise ZeroMatrix("all codewords are zero")
    if k > MAX_ENUM_ROWS:
        raise TooLarge(f"2^{k} codewords exceeds the enumeration budget")
    best = m.cols + 1
    best_cw = 0
    cw = 0
    prev_gray = 0
    for t in range(1, 1 << k):
        gray = t ^ (t >> 1)
        diff = gray ^ prev_gray
        cw ^= m.rows[(diff & -diff).bit_length() - 1]
        prev_gray = gray
        w = cw.bit_count()
        if w and w < best:
            best = w
            best_cw = cw
            if best == 1:
                break
    return best, best_cw
