"""Dual space of a digital net, rho-weights and the quality parameter t.

Dual vectors are int-packed with digit ``j`` of coordinate ``i`` at bit
``i*m + j - 1`` (coordinate major), matching ``DigitalNet.packed_digits``.
With this layout the rho-weight of a coordinate block is its bit length.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import LemmaViolation
from .gf2 import BitMatrix, BitVector, kernel_basis, rank, rank_of_vectors
from .netgen import DigitalNet, GeneratingMatrixSet

ENUMERATION_CAP = 24
INFINITE_WEIGHT = math.inf
COUNTING_WORK_CAP = 50_000_000


def parity_check(G: GeneratingMatrixSet) -> BitMatrix:
    """The map m -> sum_i C^(i)^T m_i as an ``m x sm`` matrix."""
    s, m = G.s, G.m
    rows = []
    for r in range(m):
        row = 0
        for i, C in enumerate(G.matrices):
            for j in range(m):
                if C[j, r]:
                    row |= 1 << (i * m + j)
        rows.append(row)
    return BitMatrix(m, s * m, tuple(rows))


@dataclass(frozen=True, eq=False)
class DualSpace:
    s: int
    m: int
    basis: tuple[BitVector, ...]
    check: BitMatrix
    generators: GeneratingMatrixSet

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return 2**self.dim

    @property
    def enumerable(self) -> bool:
        return self.dim <= ENUMERATION_CAP

    def contains(self, v: BitVector | int) -> bool:
        bits = v.bits if isinstance(v, BitVector) else int(v)
        return all((row & bits).bit_count() % 2 == 0 for row in self.check.data)

    @cached_property
    def elements(self) -> np.ndarray:
        """All dual vectors, int-packed (``uint64``), zero first."""
        if not self.enumerable:
            raise ValueError(f"dual dimension {self.dim} exceeds enumeration cap {ENUMERATION_CAP}")
        if self.s * self.m > 64:
            raise ValueError("packed dual needs s*m <= 64")
        arr = np.zeros(1, dtype=np.uint64)
        for b in self.basis:
            arr = np.concatenate([arr, arr ^ np.uint64(b.bits)])
        arr.setflags(write=False)
        return arr

    @cached_property
    def block_rho(self) -> np.ndarray:
        """``(size, s)`` array of per-coordinate rho values of every element."""
        return rho_blocks(self.elements, self.s, self.m)

    @cached_property
    def nonzero_rho(self) -> np.ndarray:
        return self.block_rho[1:]


def rho_blocks(packed: np.ndarray, s: int, m: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.uint64)
    mask = np.uint64((1 << m) - 1)
    out = np.empty(packed.shape + (s,), dtype=np.int64)
    for i in range(s):
        block = (packed >> np.uint64(i * m)) & mask
        # bit length via the float exponent; exact for m <= 53
        out[..., i] = np.frexp(block.astype(np.float64))[1]
    return out


def dual_space(G: GeneratingMatrixSet) -> DualSpace:
    H = parity_check(G)
    return DualSpace(G.s, G.m, tuple(kernel_basis(H)), H, G)


def rho(b: int) -> int:
    return int(b).bit_length()


def rho_weight(v: BitVector | int, s: int, m: int) -> int:
    if isinstance(v, BitVector):
        if v.length != s * m:
            raise ValueError(f"vector length {v.length} != s*m = {s * m}")
        bits = v.bits
    else:
        bits = int(v)
    mask = (1 << m) - 1
    return sum(((bits >> (i * m)) & mask).bit_length() for i in range(s))


def _compositions(d: int, s: int, cap: int) -> Iterator[tuple[int, ...]]:
    if s == 1:
        if d <= cap:
            yield (d,)
        return
    for first in range(min(d, cap) + 1):
        for rest in _compositions(d - first, s - 1, cap):
            yield (first,) + rest


def _prefix_rows(G: GeneratingMatrixSet, parts: Sequence[int]) -> list[int]:
    return [G.matrices[i].data[j] for i, d in enumerate(parts) for j in range(d)]


def _layer_is_independent(G: GeneratingMatrixSet, d: int) -> bool:
    return all(rank_of_vectors(_prefix_rows(G, parts)) == d for parts in _compositions(d, G.s, G.m))


def _min_weight_by_layers(G: GeneratingMatrixSet) -> float | int:
    # smallest d with a rank-deficient composition is the minimum dual weight
    for d in range(1, G.s * G.m + 1):
        if not _layer_is_independent(G, d):
            return d
    return INFINITE_WEIGHT


def min_dual_weight(D: DualSpace, method: str = "auto") -> float | int:
    """Minimum rho-weight over nonzero dual vectors; ``INFINITE_WEIGHT`` if the dual is trivial.

    ``method="enumerate"`` refuses duals above the enumeration cap;
    ``"layers"`` tests rank deficiency weight by weight; ``"auto"`` picks.
    """
    if method == "auto":
        method = "enumerate" if D.enumerable else "layers"
    if method == "layers":
        return _min_weight_by_layers(D.generators)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    if not D.enumerable:
        raise ValueError(
            f"dual dimension {D.dim} exceeds enumeration cap {ENUMERATION_CAP}; use method='layers'"
        )
    if D.dim == 0:
        return INFINITE_WEIGHT
    return int(D.nonzero_rho.sum(axis=1).min())


@dataclass(frozen=True)
class TParameter:
    value: int
    method: str  # dual_weight | rank_composition | direct_counting


def t_parameter_exact(G: GeneratingMatrixSet, method: str = "dual_weight") -> TParameter:
    if method == "dual_weight":
        w = min_dual_weight(dual_space(G))
        t = 0 if w == INFINITE_WEIGHT else max(0, G.m - int(w) + 1)
        return TParameter(t, method)
    if method == "rank_composition":
        best = 0
        for d in range(1, G.m + 1):
            if not _layer_is_independent(G, d):
                break
            best = d
        return TParameter(G.m - best, method)
    raise ValueError(f"unknown method {method!r}")


def _balanced(P: DigitalNet, t: int) -> bool:
    s, m = P.s, P.m
    level = m - t
    target = 2**t
    for parts in _compositions(level, s, m):
        key = np.zeros(P.N, dtype=np.uint64)
        for i, d in enumerate(parts):
            key = (key << np.uint64(d)) | (P.coords[:, i] >> np.uint64(m - d))
        counts = np.bincount(key.astype(np.int64), minlength=2**level)
        if counts.shape[0] != 2**level or not np.all(counts == target):
            return False
    return True


def t_parameter_counting(P: DigitalNet) -> TParameter:
    """Smallest t for which every elementary interval of volume 2^(t-m) holds 2^t points."""
    if P.N != 2**P.m:
        raise ValueError(f"a net in base 2 with m={P.m} needs {2**P.m} points, got {P.N}")
    work = sum(math.comb(P.m - t + P.s - 1, P.s - 1) for t in range(P.m + 1)) * P.N
    if work > COUNTING_WORK_CAP:
        raise ValueError(f"exhaustive counting would touch ~{work} cells; instance too large")
    for t in range(P.m + 1):
        if _balanced(P, t):
            return TParameter(t, "direct_counting")
    raise AssertionError("unreachable: every net is an (m, m, s)-net")


def _as_bits(v: BitVector | int) -> int:
    return v.bits if isinstance(v, BitVector) else int(v)


def count_G_A(D: DualSpace, A: Sequence[int]) -> int:
    """Number of dual vectors (zero included) with ``rho(m_i) <= a_i`` for all i.

    Raises ``LemmaViolation`` if the count breaks the bound
    ``2^(a_0 - rho(P^perp) + 1)``.
    """
    A = tuple(int(a) for a in A)
    if len(A) != D.s:
        raise ValueError(f"A must have {D.s} entries")
    count = int(np.all(D.block_rho <= np.array(A), axis=1).sum())
    a0 = sum(A)
    w = min_dual_weight(D)
    if w != INFINITE_WEIGHT and a0 >= w and count > 2 ** (a0 - int(w) + 1):
        raise LemmaViolation("C", f"#G_A={count} exceeds 2^({a0}-{w}+1) for A={A}")
    return count


def g_a_size_by_rank(G: GeneratingMatrixSet, A: Sequence[int]) -> int:
    """#G_A as 2^(a_0 - rank), from the first a_i rows of each C^(i)."""
    rows = _prefix_rows(G, A)
    return 2 ** (len(rows) - rank_of_vectors(rows))


def character_sum(P: DigitalNet, v: BitVector | int) -> int:
    bits = _as_bits(v)
    if isinstance(v, BitVector) and v.length != P.s * P.m:
        raise ValueError(f"vector length {v.length} != s*m = {P.s * P.m}")
    odd = np.bitwise_count(P.packed_digits() & np.uint64(bits)) & 1
    return int(P.N - 2 * int(odd.sum()))


def weight_histogram(D: DualSpace) -> dict[int, int]:
    """Counts of dual vectors by rho-weight, zero vector included at weight 0."""
    weights = D.block_rho.sum(axis=1)
    values, counts = np.unique(weights, return_counts=True)
    return {int(w): int(c) for w, c in zip(values, counts)}


def defining_map_rank(G: GeneratingMatrixSet) -> int:
    return rank(parity_check(G))
