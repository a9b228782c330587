"""Dyadic digital nets and sequence prefixes.

A coordinate with ``m`` digits is stored as the integer ``v`` with
``x = v / 2**m``; digit ``j`` (``j = 1`` most significant) is bit ``m - j``
of ``v``.  All bijections of the digital construction are the identity.

Generating matrix convention: row ``j - 1`` of ``C^(i)`` produces digit ``j``
of coordinate ``i``; column ``r`` multiplies the counter digit ``e_r(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .gf2 import BitMatrix, BitVector

MAX_DEPTH = 62


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeneratingMatrixSet:
    s: int
    m: int
    matrices: tuple[BitMatrix, ...]

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if not 0 <= self.m <= MAX_DEPTH:
            raise ValueError(f"m must lie in [0, {MAX_DEPTH}]")
        object.__setattr__(self, "matrices", tuple(self.matrices))
        if len(self.matrices) != self.s:
            raise ValueError(f"expected {self.s} matrices, got {len(self.matrices)}")
        for i, C in enumerate(self.matrices):
            if (C.rows, C.cols) != (self.m, self.m):
                raise ValueError(f"matrix {i} is {C.rows}x{C.cols}, expected {self.m}x{self.m}")

    def column_values(self, i: int) -> list[int]:
        """Column ``r`` of ``C^(i)`` read as an m-digit coordinate integer."""
        C = self.matrices[i]
        return [sum(C[j, r] << (self.m - 1 - j) for j in range(self.m)) for r in range(self.m)]


@dataclass(frozen=True, eq=False)
class DigitalNet:
    """Point multiset with exact m-digit coordinates.

    ``coords[n, i]`` is the integer numerator of coordinate ``i`` of point ``n``.
    """

    s: int
    m: int
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.uint64, copy=True)
        if c.ndim != 2 or c.shape[1] != self.s:
            raise ValueError(f"coords must have shape (N, {self.s})")
        if c.size and int(c.max()) >> self.m:
            raise ValueError(f"coordinate does not fit in {self.m} digits")
        object.__setattr__(self, "coords", _readonly(c))

    @property
    def N(self) -> int:
        return self.coords.shape[0]

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other) -> bool:
        if not isinstance(other, DigitalNet):
            return NotImplemented
        return (self.s, self.m) == (other.s, other.m) and np.array_equal(self.coords, other.coords)

    __hash__ = None

    def as_float(self) -> np.ndarray:
        return self.coords.astype(np.float64) / float(2**self.m)

    def as_fractions(self, n: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(int(v), 2**self.m) for v in self.coords[n])

    def point_digits(self, n: int) -> tuple[BitVector, ...]:
        """Digit strings of point ``n``; entry ``j - 1`` holds digit ``j``."""
        return tuple(BitVector(self.m, _reverse_bits(int(v), self.m)) for v in self.coords[n])

    def digit_array(self) -> np.ndarray:
        """``(N, s, m)`` array of digits, last axis ordered j = 1..m."""
        shifts = np.arange(self.m - 1, -1, -1, dtype=np.uint64)
        return ((self.coords[:, :, None] >> shifts) & np.uint64(1)).astype(np.uint8)

    def packed_digits(self) -> np.ndarray:
        """Each point as an ``s*m``-bit int: digit ``j`` of coordinate ``i`` at bit ``i*m + j - 1``.

        This is the layout used for dual vectors, so ``popcount(packed & v)``
        is the exponent of the character at ``v``.
        """
        if self.s * self.m > 64:
            raise ValueError("packed layout needs s*m <= 64")
        out = np.zeros(self.N, dtype=np.uint64)
        for i in range(self.s):
            out |= reverse_bits_array(self.coords[:, i], self.m) << np.uint64(i * self.m)
        return out


@dataclass(frozen=True)
class ShiftVector:
    s: int
    m: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) != self.s:
            raise ValueError(f"expected {self.s} components")
        for v in self.values:
            if not 0 <= v < 2**self.m:
                raise ValueError(f"component {v} outside Q(2^{self.m})")

    @classmethod
    def zeros(cls, s: int, m: int) -> "ShiftVector":
        return cls(s, m, (0,) * s)

    @classmethod
    def from_digits(cls, digits: Sequence[BitVector]) -> "ShiftVector":
        m = digits[0].length if digits else 0
        if any(d.length != m for d in digits):
            raise ValueError("digit strings of unequal length")
        return cls(len(digits), m, tuple(_reverse_bits(d.bits, m) for d in digits))

    @property
    def digits(self) -> tuple[BitVector, ...]:
        return tuple(BitVector(self.m, _reverse_bits(v, self.m)) for v in self.values)

    def as_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, 2**self.m) for v in self.values)

    def packed(self) -> int:
        out = 0
        for i, v in enumerate(self.values):
            out |= _reverse_bits(v, self.m) << (i * self.m)
        return out


def _reverse_bits(v: int, m: int) -> int:
    out = 0
    for _ in range(m):
        out = (out << 1) | (v & 1)
        v >>= 1
    return out


def reverse_bits_array(v: np.ndarray, m: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.uint64)
    out = np.zeros_like(v)
    one = np.uint64(1)
    for k in range(m):
        out |= ((v >> np.uint64(k)) & one) << np.uint64(m - 1 - k)
    return out


def _xor_span(columns: Sequence[int], base: int = 0) -> np.ndarray:
    """Values ``base ^ XOR_{r : bit r of n} columns[r]`` for n = 0..2^len-1, in n order."""
    arr = np.array([base], dtype=np.uint64)
    for col in columns:
        arr = np.concatenate([arr, arr ^ np.uint64(col)])
    return arr


def generate_net(G: GeneratingMatrixSet) -> DigitalNet:
    coords = np.empty((2**G.m, G.s), dtype=np.uint64)
    for i in range(G.s):
        coords[:, i] = _xor_span(G.column_values(i))
    return DigitalNet(G.s, G.m, coords)


def digital_shift(P: DigitalNet, T: ShiftVector) -> DigitalNet:
    if (P.s, P.m) != (T.s, T.m):
        raise ValueError(f"net is (s={P.s}, m={P.m}) but shift is (s={T.s}, m={T.m})")
    return DigitalNet(P.s, P.m, P.coords ^ np.array(T.values, dtype=np.uint64))


def truncate(y, m: int) -> Fraction:
    """First ``m`` binary digits of ``y`` as an exact dyadic rational."""
    y = Fraction(y)
    if not 0 <= y < 1:
        raise ValueError(f"y={y} outside [0, 1)")
    if m < 0:
        raise ValueError("m must be non-negative")
    return Fraction(int(y * 2**m), 2**m)


def extend_with_index(P: DigitalNet) -> DigitalNet:
    index = np.arange(P.N, dtype=np.uint64)[:, None]
    if P.N != 2**P.m:
        raise ValueError("index extension needs exactly 2^m points")
    return DigitalNet(P.s + 1, P.m, np.hstack([index, P.coords]))


# ---------------------------------------------------------------------------
# sequences


def pascal_matrix(m: int) -> BitMatrix:
    """Upper-triangular binomial matrix mod 2: entry (j, r) = C(r, j) mod 2."""
    return BitMatrix(m, m, tuple(sum(1 << r for r in range(m) if (j & r) == j) for j in range(m)))


@dataclass(frozen=True)
class SequenceGenerator:
    """Upper-left blocks of infinite generating matrices.

    ``matrix_source(i, depth)`` must return the ``depth x depth`` block of
    the i-th matrix; blocks must be nested.
    """

    s: int
    m_max: int
    matrix_source: Callable[[int, int], BitMatrix]
    name: str = "custom"

    def block(self, depth: int) -> GeneratingMatrixSet:
        if depth > self.m_max:
            raise ValueError(f"depth {depth} exceeds m_max={self.m_max}")
        return GeneratingMatrixSet(self.s, depth, tuple(self.matrix_source(i, depth) for i in range(self.s)))


def sequence_prefix(gen: SequenceGenerator, k: int, m: int) -> DigitalNet:
    """Points ``x_{k 2^m}, ..., x_{k 2^m + 2^m - 1}`` truncated to m digits."""
    if k < 0 or m < 0:
        raise ValueError("k and m must be non-negative")
    depth = m + k.bit_length()
    if depth > gen.m_max:
        raise ValueError(f"generation depth {depth} exceeds m_max={gen.m_max}")
    G = gen.block(depth)
    coords = np.empty((2**m, gen.s), dtype=np.uint64)
    high = k << m
    for i in range(gen.s):
        C = G.matrices[i]
        # rows 0..m-1 give the m retained digits
        cols = [sum(C[j, r] << (m - 1 - j) for j in range(m)) for r in range(depth)]
        base = 0
        for r in range(m, depth):
            if (high >> r) & 1:
                base ^= cols[r]
        coords[:, i] = _xor_span(cols[:m], base)
    return DigitalNet(gen.s, m, coords)


# ---------------------------------------------------------------------------
# built-in families

FAMILIES = ("vdc", "diag", "diag2", "pascal", "sobol2", "zero")


def _family_source(family: str, s: int) -> Callable[[int, int], BitMatrix]:
    if family == "vdc":
        if s != 1:
            raise ValueError("vdc is one-dimensional (s=1)")
        return lambda i, d: BitMatrix.identity(d)
    if family in ("diag", "diag2"):
        if family == "diag2" and s != 2:
            raise ValueError("diag2 has s=2")
        return lambda i, d: BitMatrix.identity(d)
    if family in ("pascal", "sobol2"):
        if s > 2:
            raise ValueError("pascal family supports s <= 2")
        return lambda i, d: BitMatrix.identity(d) if i == 0 else pascal_matrix(d)
    if family == "zero":
        return lambda i, d: BitMatrix.zeros(d, d)
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def default_dimension(family: str) -> int:
    return 1 if family == "vdc" else 2


def builtin_matrices(family: str, s: int, m: int) -> GeneratingMatrixSet:
    src = _family_source(family, s)
    return GeneratingMatrixSet(s, m, tuple(src(i, m) for i in range(s)))


def builtin_sequence(family: str, s: int, m_max: int = MAX_DEPTH) -> SequenceGenerator:
    return SequenceGenerator(s, m_max, _family_source(family, s), name=family)


def random_matrices(s: int, m: int, rng: np.random.Generator) -> GeneratingMatrixSet:
    mats = []
    for _ in range(s):
        bits = rng.integers(0, 2, size=(m, m))
        mats.append(BitMatrix(m, m, tuple(int(sum(int(b) << c for c, b in enumerate(row))) for row in bits)))
    return GeneratingMatrixSet(s, m, tuple(mats))


# ---------------------------------------------------------------------------
# net file format: "s m N" then N lines of s space-separated m-digit strings


def format_net(P: DigitalNet) -> str:
    lines = [f"{P.s} {P.m} {P.N}"]
    for row in P.coords:
        lines.append(" ".join(format(int(v), f"0{P.m}b") if P.m else "" for v in row))
    return "\n".join(lines) + "\n"


def parse_net(text: str) -> DigitalNet:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty net file")
    try:
        s, m, N = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise ValueError(f"bad net header {lines[0]!r}") from None
    body = lines[1:1 + N]
    if len(body) != N:
        raise ValueError(f"expected {N} points, found {len(body)}")
    coords = np.zeros((N, s), dtype=np.uint64)
    for n, ln in enumerate(body):
        toks = ln.split()
        if m == 0:
            continue
        if len(toks) != s or any(len(t) != m or set(t) - {"0", "1"} for t in toks):
            raise ValueError(f"point {n}: expected {s} strings of {m} binary digits")
        coords[n] = [int(t, 2) for t in toks]
    return DigitalNet(s, m, coords)


def read_net(path: str | Path) -> DigitalNet:
    return parse_net(Path(path).read_text())


def write_net(path: str | Path, P: DigitalNet) -> None:
    Path(path).write_text(format_net(P))
