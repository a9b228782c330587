"""Local and L2 discrepancy, Rademacher functions and the dyadic decompositions.

Exact quantities are returned as ``fractions.Fraction``.  Shifts and
truncated points are m-digit integer tuples (or ``ShiftVector``); a real
``y`` is converted exactly with ``Fraction(y)``.

The digit-truncated discrepancy D^(m) has a per-point product form.  For
``u = x XOR t`` and ``w = floor(y 2^m)`` each coordinate contributes
``2 [u < w] + [u == w]`` and the volume part is ``prod(2 w + 1) / 2^(sm)``,
so ``D^(m) = 2^-s (sum_n prod_i(...) - N prod_i (2 w_i + 1) / 2^(sm))``.
This is what the batch routines evaluate; ``method="index_sum"`` keeps the
literal sum over all index vectors for cross-checking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .dual import DualSpace, t_parameter_exact
from .netgen import DigitalNet, ShiftVector


# ---------------------------------------------------------------------------
# index vectors


@dataclass(frozen=True)
class IndexVector:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(a) for a in self.values))
        if any(a < 0 for a in self.values):
            raise ValueError("index entries must be non-negative")

    @property
    def s(self) -> int:
        return len(self.values)

    @property
    def a0(self) -> int:
        return sum(self.values)

    @property
    def kappa(self) -> int:
        return sum(1 for a in self.values if a)

    @property
    def volume(self) -> Fraction:
        return Fraction(1, 2**self.a0)

    def check(self, m: int) -> None:
        if any(a > m for a in self.values):
            raise ValueError(f"index vector {self.values} has entries above m={m}")

    def __iter__(self):
        return iter(self.values)


def _index(A) -> IndexVector:
    return A if isinstance(A, IndexVector) else IndexVector(tuple(A))


def index_vectors(m: int, s: int) -> Iterator[IndexVector]:
    """All of I_m^s in lexicographic order."""
    for a in itertools.product(range(m + 1), repeat=s):
        yield IndexVector(a)


def v0(m: int) -> float:
    if m < 1:
        raise ValueError("V0 needs m >= 1")
    return 10 * math.log2(m)


def index_families(m: int, s: int, t: int) -> dict[int, tuple[IndexVector, ...]]:
    """Families I_{m,s,k}, k = 1..m, and the remainder family under key m + 1.

    Window membership uses strict inequalities ``m - t < a_0 < m + V0``.
    """
    if not 0 <= t <= m:
        raise ValueError(f"t must lie in [0, m]; got t={t}, m={m}")
    upper = m + v0(m)
    fam: dict[int, list[IndexVector]] = {k: [] for k in range(1, m + 2)}
    for A in index_vectors(m, s):
        a0 = A.a0
        if a0 >= upper:
            fam[m + 1].append(A)
        elif m - t < a0 < upper:
            fam[max(A.values)].append(A)
    return {k: tuple(v) for k, v in fam.items()}


# ---------------------------------------------------------------------------
# scalar helpers


def _top_digits(y, m: int) -> int:
    """floor(y 2^m) for y in [0, 1]."""
    return math.floor(Fraction(y) * 2**m)


def _shift_values(Z, s: int, m: int) -> tuple[int, ...]:
    if isinstance(Z, ShiftVector):
        if (Z.s, Z.m) != (s, m):
            raise ValueError(f"shift is (s={Z.s}, m={Z.m}), expected (s={s}, m={m})")
        return Z.values
    vals = tuple(int(z) for z in Z)
    if len(vals) != s or any(not 0 <= z < 2**m for z in vals):
        raise ValueError(f"expected {s} integers in [0, 2^{m})")
    return vals


def digit(y, a: int) -> int:
    """a-th binary digit of y (finite expansion for dyadic rationals)."""
    return math.floor(Fraction(y) * 2**a) & 1


def rademacher(A, Y: Sequence) -> int:
    A = _index(A)
    if len(Y) != A.s:
        raise ValueError("dimension mismatch")
    r = 1
    for a, y in zip(A.values, Y):
        if a:
            r *= 1 - 2 * digit(y, a)
    return r


def local_discrepancy(P: DigitalNet, Y: Sequence) -> Fraction:
    """Points in [0, y_1) x ... x [0, y_s) minus N * vol, exactly."""
    if len(Y) != P.s:
        raise ValueError(f"Y must have {P.s} coordinates")
    Yf = [Fraction(y) for y in Y]
    if any(not 0 < y <= 1 for y in Yf):
        raise ValueError("Y coordinates must lie in (0, 1]")
    # x = v / 2^m < y  <=>  v < ceil(y 2^m)
    ceil = np.array([math.ceil(y * 2**P.m) for y in Yf], dtype=np.uint64)
    count = int(np.all(P.coords < ceil, axis=1).sum())
    return count - P.N * math.prod(Yf)


def l2_discrepancy_sq(P: DigitalNet, exact: bool = False, chunk: int = 512):
    """Warnock's closed form of the integral of D(P, Y)^2 over [0, 1]^s.

    Returns a float, or a ``Fraction`` when ``exact`` is set.
    """
    s, m, N = P.s, P.m, P.N
    if N == 0:
        return Fraction(0) if exact else 0.0
    full = 2**m
    big = (s + 2) * m + math.ceil(math.log2(N)) * 2 >= 62
    c = P.coords.astype(object if big else np.int64)
    pair = 0
    for lo in range(0, N, chunk):
        blk = c[lo:lo + chunk]
        prod = np.ones((blk.shape[0], N), dtype=c.dtype)
        for i in range(s):
            prod = prod * (full - np.maximum(blk[:, i][:, None], c[:, i][None, :]))
        pair += int(prod.sum())
    single = int(np.prod(full * full - c * c, axis=1).sum())
    val = (Fraction(pair, full**s) - Fraction(2 * N * single, 2**s * full ** (2 * s))
           + Fraction(N * N, 3**s))
    return val if exact else float(val)


# ---------------------------------------------------------------------------
# micro-local discrepancies


def _box_mask(u: np.ndarray, A: IndexVector, m: int) -> np.ndarray:
    """Rows of m-digit points u lying in Pi_A."""
    inside = np.ones(u.shape[0], dtype=bool)
    for i, a in enumerate(A.values):
        if a:
            inside &= (u[:, i] >> np.uint64(m - a)) == np.uint64(1)
    return inside


def micro_local_discrepancy(P: DigitalNet, A, Z) -> Fraction:
    """sum over points of 1[x XOR Z in Pi_A] - vol(Pi_A)."""
    A = _index(A)
    A.check(P.m)
    z = np.array(_shift_values(Z, P.s, P.m), dtype=np.uint64)
    count = int(_box_mask(P.coords ^ z, A, P.m).sum())
    return count - Fraction(P.N, 2**A.a0)


def _support_mask(D: DualSpace, A: IndexVector) -> np.ndarray:
    """Nonzero dual elements with rho(m_i) <= a_i."""
    return np.all(D.nonzero_rho <= np.array(A.values), axis=1)


def big_lambda(D: DualSpace, A, Z) -> int:
    """Restricted dual character sum Lambda_A(Z) (an integer)."""
    A = _index(A)
    A.check(D.m)
    z = ShiftVector(D.s, D.m, _shift_values(Z, D.s, D.m)).packed()
    elems = D.elements[1:][_support_mask(D, A)]
    if elems.size == 0:
        return 0
    marker = 0
    for i, a in enumerate(A.values):
        if a:
            marker |= 1 << (i * D.m + a - 1)
    expo = np.bitwise_count(elems & np.uint64(z)) + np.bitwise_count(elems & np.uint64(marker))
    odd = int((expo & 1).sum())
    return int(elems.size - 2 * odd)


def lambda_via_dual(D: DualSpace, A, Z) -> Fraction:
    A = _index(A)
    return Fraction(2**D.m, 2**A.a0) * big_lambda(D, A, Z)


# ---------------------------------------------------------------------------
# truncated-digit decomposition


def _shift_int(T, s: int, m: int) -> np.ndarray:
    return np.array(_shift_values(T, s, m), dtype=np.uint64)


def dm_decomposition(P: DigitalNet, T, Y: Sequence, method: str = "product"):
    """(D^(m), E^(m)) of the shifted net P + T at Y, with E defined as the residual."""
    s, m, N = P.s, P.m, P.N
    Yf = [Fraction(y) for y in Y]
    if len(Yf) != s or any(not 0 <= y < 1 for y in Yf):
        raise ValueError(f"Y must be {s} coordinates in [0, 1)")
    t = _shift_int(T, s, m)
    w = [_top_digits(y, m) for y in Yf]
    u = P.coords ^ t
    if method == "product":
        wa = np.array(w, dtype=np.uint64)
        factor = 2 * (u < wa).astype(np.int64) + (u == wa).astype(np.int64)
        S = int(np.prod(factor, axis=1).sum())
        dm = Fraction(S, 2**s) - Fraction(N * math.prod(2 * wi + 1 for wi in w), 2 ** (s * m + s))
    elif method == "index_sum":
        shifted = DigitalNet(s, m, u)
        total = Fraction(0)
        for A in index_vectors(m, s):
            lam = micro_local_discrepancy(shifted, A, w)
            if lam:
                total += (-1) ** A.kappa * lam * rademacher(A, Yf)
        dm = total / 2**s
    else:
        raise ValueError(f"unknown method {method!r}")
    if any(y == 0 for y in Yf):
        d = Fraction(0)
    else:
        d = local_discrepancy(DigitalNet(s, m, u), Yf)
    return dm, d - dm


def decomposition_batch(P: DigitalNet, T: np.ndarray, Y64: np.ndarray, chunk_cells: int = 1 << 22):
    """Per-sample integer ingredients of D and D^(m) for many (T, Y) pairs.

    ``T`` holds m-digit shifts and ``Y64`` 64-bit fractions (y = Y64 / 2^64),
    both of shape (B, s).  Returns ``(count, S, w)`` where ``count`` is the
    number of shifted points below Y, ``S`` the product-form sum and ``w``
    the truncations ``floor(y 2^m)``.
    """
    s, m, N = P.s, P.m, P.N
    T = np.asarray(T, dtype=np.uint64)
    Y64 = np.asarray(Y64, dtype=np.uint64)
    w = Y64 >> np.uint64(64 - m) if m else np.zeros_like(Y64)
    tail = Y64 & np.uint64((1 << (64 - m)) - 1) if m < 64 else np.zeros_like(Y64)
    ceil = w + (tail != 0).astype(np.uint64)
    B = T.shape[0]
    count = np.zeros(B, dtype=np.int64)
    S = np.zeros(B, dtype=np.int64)
    step = max(1, chunk_cells // max(N, 1))
    x = P.coords.astype(np.uint32 if m <= 31 else np.uint64)
    dt = x.dtype
    for lo in range(0, B, step):
        hi = min(B, lo + step)
        inside = np.ones((hi - lo, N), dtype=bool)
        prod = np.ones((hi - lo, N), dtype=np.int64)
        for i in range(s):
            ui = x[None, :, i] ^ T[lo:hi, i, None].astype(dt)
            wi = w[lo:hi, i, None].astype(dt)
            inside &= ui < ceil[lo:hi, i, None].astype(np.uint64)
            prod *= 2 * (ui < wi) + (ui == wi)
        count[lo:hi] = inside.sum(axis=1)
        S[lo:hi] = prod.sum(axis=1)
    return count, S, w


def local_discrepancy_batch(P: DigitalNet, T: np.ndarray, Y64: np.ndarray, chunk_cells: int = 1 << 22) -> np.ndarray:
    """Float D(P + T_b, Y_b) for each row b."""
    s, m, N = P.s, P.m, P.N
    T = np.asarray(T, dtype=np.uint64)
    Y64 = np.asarray(Y64, dtype=np.uint64)
    w = Y64 >> np.uint64(64 - m) if m else np.zeros_like(Y64)
    tail = Y64 & np.uint64((1 << (64 - m)) - 1) if m < 64 else np.zeros_like(Y64)
    ceil = w + (tail != 0).astype(np.uint64)
    B = T.shape[0]
    count = np.zeros(B, dtype=np.int64)
    step = max(1, chunk_cells // max(N, 1))
    if m <= 31:
        x = P.coords.astype(np.uint32)
        T = T.astype(np.uint32)
        ceil = ceil.astype(np.uint64)
    else:
        x = P.coords
    for lo in range(0, B, step):
        hi = min(B, lo + step)
        inside = (x[None, :, 0] ^ T[lo:hi, 0, None]) < ceil[lo:hi, 0, None]
        for i in range(1, s):
            inside &= (x[None, :, i] ^ T[lo:hi, i, None]) < ceil[lo:hi, i, None]
        count[lo:hi] = np.count_nonzero(inside, axis=1)
    vol = np.prod(Y64.astype(np.float64) * 2.0**-64, axis=1)
    return count - N * vol


def e_squared_batch(P: DigitalNet, T: np.ndarray, Y64: np.ndarray) -> tuple[list[Fraction], list[Fraction], list[Fraction]]:
    """Exact (D, D^(m), E) per sample, assembled from integer ingredients."""
    s, m, N = P.s, P.m, P.N
    count, S, w = decomposition_batch(P, T, Y64)
    Ds, Dms, Es = [], [], []
    scale_y = 2 ** (64 * s)
    for b in range(T.shape[0]):
        ys = [int(v) for v in Y64[b]]
        d = int(count[b]) - Fraction(N * math.prod(ys), scale_y)
        dm = Fraction(int(S[b]), 2**s) - Fraction(N * math.prod(2 * int(wi) + 1 for wi in w[b]), 2 ** (s * m + s))
        Ds.append(d)
        Dms.append(dm)
        Es.append(d - dm)
    return Ds, Dms, Es


# ---------------------------------------------------------------------------
# martingale split


@dataclass(frozen=True)
class MartingaleDecomposition:
    m: int
    s: int
    t: int
    V0: float
    terms: dict[int, Fraction]
    remainder: Fraction
    families: dict[int, tuple[IndexVector, ...]] = field(repr=False)
    psi: dict[tuple[int, ...], Fraction] = field(repr=False)

    @property
    def total(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0)) + self.remainder

    def max_abs_psi(self) -> Fraction:
        return max((abs(v) for v in self.psi.values()), default=Fraction(0))


def martingale_terms(P: DigitalNet, T, Y: Sequence, t: int | None = None,
                     dual: DualSpace | None = None, G=None, route: str = "dual") -> MartingaleDecomposition:
    """Split D^(m)(P + T, Y) into the terms D_k, k = 1..m, and the remainder R.

    ``route="dual"`` evaluates every Psi_A from the restricted dual sums
    (needs ``dual``); ``route="count"`` uses direct micro-local counts.
    """
    s, m = P.s, P.m
    if t is None:
        if G is None and dual is None:
            raise ValueError("need t, the generating matrices or the dual space")
        t = t_parameter_exact(G if G is not None else dual.generators).value
    t = int(getattr(t, "value", t))
    tv = _shift_values(T, s, m)
    w = [_top_digits(y, m) for y in Y]
    z = tuple(a ^ b for a, b in zip(tv, w))
    fams = index_families(m, s, t)
    psi: dict[tuple[int, ...], Fraction] = {}
    sums: dict[int, Fraction] = {}
    for k, fam in fams.items():
        acc = Fraction(0)
        for A in fam:
            sign = (-1) ** A.kappa * rademacher(A, Y)
            if route == "dual":
                if dual is None:
                    raise ValueError("route='dual' needs the dual space")
                val = sign * Fraction(2**m, 2 ** (s + A.a0)) * big_lambda(dual, A, z)
            elif route == "count":
                val = sign * micro_local_discrepancy(P, A, z) / 2**s
            else:
                raise ValueError(f"unknown route {route!r}")
            psi[A.values] = val
            acc += val
        sums[k] = acc
    remainder = sums.pop(m + 1)
    return MartingaleDecomposition(m, s, t, v0(m), sums, remainder, fams, psi)


# ---------------------------------------------------------------------------
# digit-level expectations

CONDITIONAL_CAP = 20


def conditional_expectation(f: Callable, k: int, m: int, s: int) -> Callable:
    """E(f | F_k): average f(T, Y) over all digits j in [k+1, m] of T and Y.

    ``f`` takes two tuples of s m-digit integers.  The returned function takes
    the same arguments and only reads digits j <= k.
    """
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m")
    free = 2 * s * (m - k)
    if free > CONDITIONAL_CAP:
        raise ValueError(f"2s(m-k) = {free} exceeds cap {CONDITIONAL_CAP}")
    low = m - k
    keep = ((1 << m) - 1) ^ ((1 << low) - 1)
    n_comp = 1 << free

    def averaged(T, Y):
        T0 = [int(v) & keep for v in T]
        Y0 = [int(v) & keep for v in Y]
        total = 0
        lowmask = (1 << low) - 1
        for c in range(n_comp):
            Tc = tuple(T0[i] | ((c >> (i * low)) & lowmask) for i in range(s))
            Yc = tuple(Y0[i] | ((c >> ((s + i) * low)) & lowmask) for i in range(s))
            total += f(Tc, Yc)
        return Fraction(total, n_comp) if isinstance(total, (int, Fraction)) else total / n_comp

    return averaged


def full_expectation(f: Callable, m: int, s: int):
    return conditional_expectation(f, 0, m, s)((0,) * s, (0,) * s)
