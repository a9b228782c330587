"""Shift-averaged discrepancy moments and the CLT / moment-ratio experiments.

Sampling discipline: sample ``i`` reads its random words from block
``i // BLOCK`` of a Philox stream keyed by ``SeedSequence(seed, spawn_key=(block,))``.
Each sample consumes ``2 s`` raw 64-bit words (s for the shift, s for Y), so
a sample's draws depend only on ``(seed, i)`` and threaded runs reproduce
serial ones bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .discrepancy import l2_discrepancy_sq, local_discrepancy_batch
from .gf2 import rank_of_vectors
from .netgen import DigitalNet, ShiftVector, digital_shift

BLOCK = 4096
DEFAULT_SEED = 20240917
HIST_BINS = 61
HIST_RANGE = (-6.0, 6.0)
PAIRWISE_CAP = 2**13
LITERAL_SHIFT_CAP = 16


def chi_p(p: float) -> float:
    """E|N(0,1)|^p."""
    if not p > 0:
        raise ValueError("p must be positive")
    if float(p).is_integer() and int(p) % 2 == 0:
        r = int(p) // 2
        return float(math.factorial(2 * r) // (2**r * math.factorial(r)))
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def std_normal_cdf(w: float) -> float:
    return 0.5 * math.erfc(-w / math.sqrt(2.0))


def ks_distance(samples: np.ndarray) -> float:
    """One-sample Kolmogorov-Smirnov distance to the standard normal."""
    z = np.sort(np.asarray(samples, dtype=np.float64))
    n = z.size
    if n == 0:
        raise ValueError("no samples")
    F = ndtr(z)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def moment_band(s: int, p: float, t: int) -> tuple[float, float]:
    """Band for m^{-(s-1)/2} M_{s,p} valid for every dyadic (t, m, s)-net."""
    return 2.0 ** (-2 * s - 2) * (1 + 1 / p) * s ** (-(s - 1) / 2), s * p * 2.0 ** (t + 2)


# ---------------------------------------------------------------------------
# random streams


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_block(s: int, m: int, seed: int, block: int, size: int = BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Shifts T (uniform on Q^s(2^m), as m-digit ints) and 64-bit Y fractions for one block."""
    raw = _block_rng(seed, block).bit_generator.random_raw(BLOCK * 2 * s).reshape(BLOCK, 2 * s)[:size]
    T = raw[:, :s] >> np.uint64(64 - m) if m else np.zeros((size, s), dtype=np.uint64)
    return T, raw[:, s:].copy()


def _blocks(n: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK, n - b * BLOCK)) for b in range((n + BLOCK - 1) // BLOCK)]


def sample_discrepancies(P: DigitalNet, n_samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """D(P + T, Y) for ``n_samples`` independent uniform (T, Y) pairs."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")

    def work(job):
        b, size = job
        T, Y = sample_block(P.s, P.m, seed, b, size)
        return local_discrepancy_batch(P, T, Y)

    jobs = _blocks(n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    value: float
    method: str  # exact_enumeration | exact_warnock_shift_avg | monte_carlo
    std_error: float = 0.0
    n_samples: int = 0
    seed: int | None = None
    exact_square: Fraction | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("exact_square")
        return d


@dataclass(frozen=True)
class SamplerConfig:
    method: str = "exact_enumeration"
    n_samples: int | None = 10_000
    seed: int = DEFAULT_SEED
    threads: int = 1


def _coset_uniform(P: DigitalNet) -> bool:
    """True if the point multiset is a coset of an XOR subgroup, each element equally often."""
    if P.s * P.m > 64 or P.N == 0:
        return False
    g = P.packed_digits() ^ P.packed_digits()[0]
    uniq, counts = np.unique(g, return_counts=True)
    if not np.all(counts == counts[0]):
        return False
    K = uniq.size
    if K & (K - 1):
        return False
    work = uniq.copy()
    rank = 0
    while True:
        nz = work[work != 0]
        if nz.size == 0:
            break
        b = nz[0]
        lead = np.uint64(1) << np.uint64(int(b).bit_length() - 1)
        work = np.where((work & lead) != 0, work ^ b, work)
        rank += 1
    return 2**rank == K


def _kernel_numerators(d: np.ndarray, m: int) -> np.ndarray:
    # 2^(m+1) * E_u[1 - max(u, u XOR d)]  =  2^m + 1 - 2^(bitlength(d) - 1)
    d = np.asarray(d, dtype=np.uint64)
    e = np.frexp(d.astype(np.float64))[1]
    top = np.where(d == 0, 0, np.left_shift(np.int64(1), np.maximum(e - 1, 0).astype(np.int64)))
    return (2**m + 1) - top


def shift_averaged_l2_sq(P: DigitalNet) -> Fraction:
    """Exact 2^{-sm} sum over all T in Q^s(2^m) of the squared L2 discrepancy of P + T.

    Averaging Warnock's formula over digital shifts gives a kernel in
    ``x XOR x'`` only; for nets that are cosets of a subgroup the double sum
    collapses to ``N`` times a single sum.
    """
    s, m, N = P.s, P.m, P.N
    full = 2**m
    wide = s * (m + 1) + 2 * max(1, math.ceil(math.log2(max(N, 2)))) >= 62
    if _coset_uniform(P):
        d = P.coords ^ P.coords[0]
        K = _kernel_numerators(d, m).astype(object if wide else np.int64)
        pair = N * int(np.prod(K, axis=1).sum())
    else:
        if N > PAIRWISE_CAP:
            raise ValueError(f"{N} points is above the pairwise cap {PAIRWISE_CAP} for non-group point sets")
        pair = 0
        for n in range(N):
            K = _kernel_numerators(P.coords[n] ^ P.coords, m).astype(object if wide else np.int64)
            pair += int(np.prod(K, axis=1).sum())
    c1 = 1 - Fraction((full - 1) * (2 * full - 1), 6 * full * full)
    return Fraction(pair, 2 ** (s * (m + 1))) - Fraction(2 * N * N, 2**s) * c1**s + Fraction(N * N, 3**s)


def enumerate_shifts_l2_sq(P: DigitalNet) -> Fraction:
    """Literal average of exact Warnock values over every shift (small s*m only)."""
    if P.s * P.m > LITERAL_SHIFT_CAP:
        raise ValueError(f"s*m = {P.s * P.m} exceeds the literal enumeration cap {LITERAL_SHIFT_CAP}")
    total = Fraction(0)
    for vals in np.ndindex(*(2**P.m,) * P.s):
        total += l2_discrepancy_sq(digital_shift(P, ShiftVector(P.s, P.m, vals)), exact=True)
    return total / 2 ** (P.s * P.m)


def estimate_M_sp(P: DigitalNet, p: float = 2.0, cfg: SamplerConfig | None = None) -> MomentEstimate:
    cfg = cfg or SamplerConfig()
    if not p > 0:
        raise ValueError("p must be positive")
    if cfg.method in ("exact_enumeration", "exact_warnock_shift_avg") and p != 2:
        raise ValueError(f"{cfg.method} is only defined for p = 2")

    if cfg.method == "exact_enumeration":
        sq = shift_averaged_l2_sq(P)
        return MomentEstimate(2.0, math.sqrt(sq), cfg.method, 0.0, 2 ** (P.s * P.m), None, sq)

    if cfg.method == "exact_warnock_shift_avg":
        if cfg.n_samples is None:
            if P.s * P.m > LITERAL_SHIFT_CAP:
                raise ValueError("full shift sweep too large; give n_samples")
            shifts = list(np.ndindex(*(2**P.m,) * P.s))
        else:
            shifts = []
            for b, size in _blocks(cfg.n_samples):
                T, _ = sample_block(P.s, P.m, cfg.seed, b, size)
                shifts.extend(tuple(int(v) for v in row) for row in T)
        vals = np.array([l2_discrepancy_sq(digital_shift(P, ShiftVector(P.s, P.m, t))) for t in shifts])
        mean = float(vals.mean())
        value = math.sqrt(mean)
        if cfg.n_samples is None:
            se = 0.0
        else:
            se_sq = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            se = se_sq / (2 * value) if value > 0 else 0.0
        return MomentEstimate(2.0, value, cfg.method, se, len(shifts), cfg.seed)

    if cfg.method == "monte_carlo":
        n = cfg.n_samples or 10_000
        D = sample_discrepancies(P, n, cfg.seed, cfg.threads)
        return moment_from_samples(D, p, cfg.seed)

    raise ValueError(f"unknown method {cfg.method!r}")


def moment_from_samples(D: np.ndarray, p: float, seed: int | None = None) -> MomentEstimate:
    a = np.abs(D) ** p
    mu = float(a.mean())
    value = mu ** (1 / p)
    se_mu = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    se = se_mu * mu ** (1 / p - 1) / p if mu > 0 else 0.0
    return MomentEstimate(float(p), value, "monte_carlo", se, int(a.size), seed)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class CltReport:
    m: int
    s: int
    t: int | None
    n_samples: int
    seed: int
    ks_distance: float
    empirical_moments: dict[float, float]
    moment_std_errors: dict[float, float]
    normalizer: MomentEstimate
    hist_edges: tuple[float, ...]
    hist_counts: tuple[int, ...]
    underflow: int = 0
    overflow: int = 0

    def to_dict(self) -> dict:
        return {
            "net": {"s": self.s, "m": self.m, "t": self.t},
            "seed": self.seed,
            "n": self.n_samples,
            "ks": self.ks_distance,
            "moments": {_pkey(p): v for p, v in self.empirical_moments.items()},
            "moment_stderr": {_pkey(p): v for p, v in self.moment_std_errors.items()},
            "normalizer": {
                "value": self.normalizer.value,
                "method": self.normalizer.method,
                "stderr": self.normalizer.std_error,
            },
            "histogram": {
                "lo": HIST_RANGE[0], "hi": HIST_RANGE[1], "bins": HIST_BINS,
                "underflow": self.underflow, "overflow": self.overflow,
            },
        }


def _pkey(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def clt_experiment(P: DigitalNet, n_samples: int, seed: int, normalizer: MomentEstimate,
                   t: int | None = None, threads: int = 1, samples: np.ndarray | None = None) -> CltReport:
    if normalizer.p != 2:
        raise ValueError("normalizer must be the p = 2 moment")
    if not normalizer.value > 0:
        raise ValueError("normalizer must be positive")
    D = samples if samples is not None else sample_discrepancies(P, n_samples, seed, threads)
    Z = D / normalizer.value
    moments, errs = {}, {}
    for p in (1, 2, 3, 4):
        a = np.abs(Z) ** p
        moments[float(p)] = float(a.mean())
        errs[float(p)] = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    counts, edges = np.histogram(Z, bins=HIST_BINS, range=HIST_RANGE)
    return CltReport(
        m=P.m, s=P.s, t=t, n_samples=int(Z.size), seed=seed,
        ks_distance=ks_distance(Z),
        empirical_moments=moments, moment_std_errors=errs, normalizer=normalizer,
        hist_edges=tuple(float(e) for e in edges), hist_counts=tuple(int(c) for c in counts),
        underflow=int((Z < HIST_RANGE[0]).sum()), overflow=int((Z >= HIST_RANGE[1]).sum()),
    )


@dataclass(frozen=True)
class MomentRatio:
    p: float
    ratio: float  # (M_p / M_2)^p
    target: float  # chi_p
    raw_ratio: float  # M_p / M_2
    M_p: float
    M_2: float
    std_error: float  # of ratio


def _ratio_from_samples(D: np.ndarray, p: float) -> MomentRatio:
    a = np.abs(D) ** p
    b = D * D
    A, B = float(a.mean()), float(b.mean())
    ratio = A / B ** (p / 2)
    Mp, M2 = A ** (1 / p), math.sqrt(B)
    if p == 2:
        ratio, se = 1.0, 0.0
    else:
        cov = np.cov(np.vstack([a, b]), ddof=1) / a.size
        g = np.array([1 / B ** (p / 2), -(p / 2) * A * B ** (-p / 2 - 1)])
        se = float(math.sqrt(max(g @ cov @ g, 0.0)))
    return MomentRatio(float(p), ratio, chi_p(p), Mp / M2, Mp, M2, se)


def moment_ratio_experiment(P: DigitalNet, p_list: Iterable[float], n_samples: int, seed: int,
                            threads: int = 1, samples: np.ndarray | None = None) -> dict[float, MomentRatio]:
    p_list = [float(p) for p in p_list]
    if any(not p > 0 for p in p_list):
        raise ValueError("all p must be positive")
    D = samples if samples is not None else sample_discrepancies(P, n_samples, seed, threads)
    return {p: _ratio_from_samples(D, p) for p in p_list}


def _abs_power_integral(lo: float, hi: float, p: float) -> float:
    """Integral of |w|^p over [lo, hi]."""
    G = lambda w: math.copysign(abs(w) ** (p + 1), w) / (p + 1)
    return G(hi) - G(lo)


def exact_moment_1d(P: DigitalNet, p: float) -> float:
    """2^{-m} sum_T integral |D(P + T, y)|^p dy for s = 1, exact up to float rounding.

    D is linear on each cell (j 2^-m, (j+1) 2^-m) of y, so each cell
    integral is closed form.
    """
    if P.s != 1:
        raise ValueError("closed-form cell integration is one-dimensional")
    m, N = P.m, P.N
    full = 2**m
    total = 0.0
    for t in range(full):
        u = np.sort((P.coords[:, 0] ^ np.uint64(t)).astype(np.int64))
        # count of points with u <= j, for each cell j
        c = np.searchsorted(u, np.arange(full), side="right")
        for j in range(full):
            lo_y, hi_y = j / full, (j + 1) / full
            total += _abs_power_integral(c[j] - N * hi_y, c[j] - N * lo_y, p) / N
    return total / full


def exact_ratio_1d(P: DigitalNet, p: float) -> float:
    return exact_moment_1d(P, p) / exact_moment_1d(P, 2.0) ** (p / 2)
