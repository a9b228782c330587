"""Linear algebra over GF(2) on int-packed bit rows.

Entry ``k`` of a vector (or column ``k`` of a matrix row) lives in bit ``k``
of a Python int.  All values are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class BitVector:
    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"bits 0x{self.bits:x} do not fit in length {self.length}")

    @classmethod
    def from_list(cls, entries: Sequence[int]) -> "BitVector":
        bits = 0
        for k, e in enumerate(entries):
            if e not in (0, 1):
                raise ValueError(f"entry {k} is {e!r}, expected 0 or 1")
            bits |= e << k
        return cls(len(entries), bits)

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, 0)

    @classmethod
    def unit(cls, length: int, k: int) -> "BitVector":
        if not 0 <= k < length:
            raise IndexError(k)
        return cls(length, 1 << k)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, k: int) -> int:
        if not 0 <= k < self.length:
            raise IndexError(k)
        return (self.bits >> k) & 1

    def __iter__(self) -> Iterator[int]:
        return (self[k] for k in range(self.length))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.length != self.length:
            raise ValueError("length mismatch")
        return BitVector(self.length, self.bits ^ other.bits)

    def to_list(self) -> list[int]:
        return list(self)

    def dot(self, other: "BitVector") -> int:
        if other.length != self.length:
            raise ValueError("length mismatch")
        return (self.bits & other.bits).bit_count() & 1

    def weight(self) -> int:
        return self.bits.bit_count()

    def is_zero(self) -> bool:
        return self.bits == 0

    def __str__(self) -> str:
        return "".join(str(b) for b in self)


@dataclass(frozen=True)
class BitMatrix:
    rows: int
    cols: int
    data: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("shape must be non-negative")
        data = tuple(self.data) if self.data else (0,) * self.rows
        if len(data) != self.rows:
            raise ValueError(f"expected {self.rows} rows, got {len(data)}")
        for r, row in enumerate(data):
            if row < 0 or row >> self.cols:
                raise ValueError(f"row {r} does not fit in {self.cols} columns")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        if not rows:
            return cls(0, 0)
        cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(BitVector.from_list(r).bits for r in rows))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << k for k in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    def __getitem__(self, idx: tuple[int, int]) -> int:
        r, c = idx
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(idx)
        return (self.data[r] >> c) & 1

    def row(self, r: int) -> BitVector:
        return BitVector(self.cols, self.data[r])

    def to_rows(self) -> list[list[int]]:
        return [[self[r, c] for c in range(self.cols)] for r in range(self.rows)]

    def transpose(self) -> "BitMatrix":
        out = [0] * self.cols
        for r, row in enumerate(self.data):
            c = 0
            while row:
                if row & 1:
                    out[c] |= 1 << r
                row >>= 1
                c += 1
        return BitMatrix(self.cols, self.rows, tuple(out))

    def submatrix(self, rows: int, cols: int) -> "BitMatrix":
        """Upper-left ``rows x cols`` block."""
        if rows > self.rows or cols > self.cols:
            raise ValueError("block larger than matrix")
        mask = (1 << cols) - 1
        return BitMatrix(rows, cols, tuple(row & mask for row in self.data[:rows]))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        out = []
        for row in self.data:
            acc = 0
            c = 0
            while row:
                if row & 1:
                    acc ^= other.data[c]
                row >>= 1
                c += 1
            out.append(acc)
        return BitMatrix(self.rows, other.cols, tuple(out))


def mat_vec_mul(M: BitMatrix, v: BitVector) -> BitVector:
    if v.length != M.cols:
        raise ValueError(f"vector length {v.length} != matrix cols {M.cols}")
    out = 0
    for j, row in enumerate(M.data):
        out |= ((row & v.bits).bit_count() & 1) << j
    return BitVector(M.rows, out)


def _rank_of_rows(rows: Iterable[int]) -> int:
    # xor basis keyed by leading bit
    basis: dict[int, int] = {}
    for row in rows:
        while row:
            lead = row.bit_length() - 1
            if lead not in basis:
                basis[lead] = row
                break
            row ^= basis[lead]
    return len(basis)


def rank(M: BitMatrix) -> int:
    return _rank_of_rows(M.data)


def rank_of_vectors(vectors: Iterable[int]) -> int:
    """Rank of int-packed vectors (any common length)."""
    return _rank_of_rows(vectors)


def rref(M: BitMatrix) -> tuple[list[int], list[int]]:
    """Reduced row echelon form.

    Returns the nonzero reduced rows and their pivot columns (lowest set bit
    scanning from column 0).
    """
    rows = list(M.data)
    pivots: list[int] = []
    r = 0
    for c in range(M.cols):
        bit = 1 << c
        piv = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def kernel_basis(M: BitMatrix) -> list[BitVector]:
    """Basis of the right null space ``{v : M v = 0}``."""
    reduced, pivots = rref(M)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pivot_set:
            continue
        v = 1 << free
        for row, p in zip(reduced, pivots):
            if (row >> free) & 1:
                v |= 1 << p
        basis.append(BitVector(M.cols, v))
    return basis


def span(vectors: Sequence[BitVector]) -> set[int]:
    """All int-packed elements of the span (exponential; small inputs only)."""
    out = {0}
    for v in vectors:
        out |= {x ^ v.bits for x in out}
    return out


def format_matrix(M: BitMatrix) -> str:
    lines = [f"{M.rows} {M.cols}"]
    for r in range(M.rows):
        lines.append("".join(str(M[r, c]) for c in range(M.cols)))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BitMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise ValueError(f"bad matrix header {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"expected {rows} rows, found {len(body)}")
    parsed = []
    for r, ln in enumerate(body):
        if len(ln) != cols or set(ln) - {"0", "1"}:
            raise ValueError(f"row {r}: expected {cols} characters from {{0,1}}")
        parsed.append([int(ch) for ch in ln])
    if rows == 0:
        return BitMatrix(0, cols)
    return BitMatrix(rows, cols, tuple(BitVector.from_list(r).bits for r in parsed))


def read_matrices(path: str | Path) -> list[BitMatrix]:
    """Read one or more concatenated matrices in the text format."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    out = []
    i = 0
    while i < len(lines):
        try:
            rows, _ = (int(tok) for tok in lines[i].split())
        except ValueError:
            raise ValueError(f"line {i + 1}: bad matrix header {lines[i]!r}") from None
        out.append(parse_matrix("\n".join(lines[i:i + rows + 1])))
        i += rows + 1
    return out


def write_matrices(path: str | Path, matrices: Sequence[BitMatrix]) -> None:
    Path(path).write_text("".join(format_matrix(M) for M in matrices))
